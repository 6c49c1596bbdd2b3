"""
CSV ingestion: samples as rows, dimensions as columns.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import IngestError
from .estimators import PairedDataset
from .rng import generator


@dataclass(frozen=True)
class IngestOptions:
    subsample_stride: Optional[int] = None
    subsample_dims: Optional[int] = None
    standardize: bool = False
    seed: int = 0


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix(path) -> np.ndarray:
    """Read a numeric CSV into a float array.

    A first row made entirely of non-numeric cells is taken as a header.
    Empty cells and ``nan`` become NaN (dropped later as incomplete cases).
    Any other non-numeric cell raises ``IngestError`` with its 1-based
    line and column.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [row for row in csv.reader(fh) if any(c.strip() for c in row)]
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise IngestError(f"{path}: file is empty")
    start = 0
    first = [c.strip() for c in rows[0]]
    if all(c and not _is_number(c) for c in first):
        start = 1
    body = rows[start:]
    if not body:
        raise IngestError(f"{path}: no data rows")
    width = len(body[0])
    out = np.empty((len(body), width))
    for i, row in enumerate(body):
        if len(row) != width:
            raise IngestError(
                f"{path}: line {i + start + 1} has {len(row)} columns, expected {width}"
            )
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                out[i, j] = math.nan
                continue
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise IngestError(
                    f"{path}: non-numeric cell {cell!r} at line {i + start + 1}, column {j + 1}"
                ) from None
    return out


def _select_dims(arrays: List[np.ndarray], d: int, seed: int) -> List[np.ndarray]:
    # equal-width inputs share one subset (same grid locations)
    out = []
    shared = None
    for key, a in enumerate(arrays):
        if d > a.shape[1]:
            raise IngestError(f"cannot keep {d} of {a.shape[1]} dimensions")
        if shared is not None and shared[0] == a.shape[1]:
            idx = shared[1]
        else:
            idx = np.sort(generator(seed, 7, key).choice(a.shape[1], size=d, replace=False))
            shared = (a.shape[1], idx)
        out.append(a[:, idx])
    return out


def _standardize(a: np.ndarray) -> np.ndarray:
    sd = a.std(axis=0, ddof=1)
    sd = np.where(sd > 0, sd, 1.0)
    return (a - a.mean(axis=0)) / sd


def prepare(x: np.ndarray, y: np.ndarray, options: Optional[IngestOptions] = None) -> PairedDataset:
    """Complete cases, then row stride, dimension subset, standardization."""
    options = options or IngestOptions()
    if x.shape[0] != y.shape[0]:
        raise IngestError(f"row count mismatch: X has {x.shape[0]} rows, Y has {y.shape[0]}")
    keep = np.all(np.isfinite(x), axis=1) & np.all(np.isfinite(y), axis=1)
    x, y = x[keep], y[keep]
    if options.subsample_stride:
        if options.subsample_stride < 1:
            raise IngestError("subsample stride must be >= 1")
        x, y = x[:: options.subsample_stride], y[:: options.subsample_stride]
    if options.subsample_dims:
        x, y = _select_dims([x, y], options.subsample_dims, options.seed)
    if options.standardize:
        x, y = _standardize(x), _standardize(y)
    if x.shape[0] == 0:
        raise IngestError("no complete rows left after filtering")
    return PairedDataset(x, y)


def ingest(x_path, y_path=None, split_index: Optional[int] = None, options: Optional[IngestOptions] = None) -> PairedDataset:
    """Load a paired dataset from two CSVs, or one CSV split at a column.

    With ``split_index`` the columns ``[0, split_index)`` of ``x_path`` are
    X and the remaining columns are Y.
    """
    x = read_matrix(x_path)
    if y_path is not None:
        if split_index is not None:
            raise IngestError("give either a Y file or a split index, not both")
        y = read_matrix(y_path)
    else:
        if split_index is None:
            raise IngestError("a Y file or a split index is required")
        if not 0 < split_index < x.shape[1]:
            raise IngestError(f"split index {split_index} outside (0, {x.shape[1]})")
        x, y = x[:, :split_index], x[:, split_index:]
    return prepare(x, y, options)
