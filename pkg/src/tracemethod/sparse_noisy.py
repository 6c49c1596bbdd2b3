"""
Sparse structure-matrix estimation for the noisy, small-sample case.

Each row of the structure matrix is a separate regression of one effect
coordinate on all cause coordinates. The predictors are first screened
down to about k/3 candidates (least angle regression when n/k < 10, sure
independence screening otherwise), then the surviving coefficients are fit
by ordinary least squares. The noise is assumed uncorrelated across
dimensions; this is not checked.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DimensionError, InsufficientDataError, TraceMethodError
from .estimators import Direction, PairedDataset, StructureEstimate

log = logging.getLogger(__name__)

SIS_RATIO = 10  # use SIS when n / k >= this


class ScreeningWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ScreeningConfig:
    """Screening settings; ``target_size=None`` means ``ceil(k / 3)``."""

    target_size: Optional[int] = None
    method: str = "auto"
    threads: int = 1

    def __post_init__(self):
        if self.method not in ("auto", "lars", "sis"):
            raise ValueError(f"unknown screening method {self.method!r}")
        if self.target_size is not None and self.target_size < 1:
            raise ValueError("target_size must be >= 1")

    def size_for(self, k: int) -> int:
        d = self.target_size if self.target_size is not None else math.ceil(k / 3)
        if not 1 <= d < k:
            raise ValueError(f"target size {d} must satisfy 1 <= d < k = {k}")
        return d

    def method_for(self, n: int, k: int) -> str:
        if self.method != "auto":
            return self.method
        return "sis" if n / k >= SIS_RATIO else "lars"


@dataclass(frozen=True)
class SparseRowEstimate:
    support: np.ndarray
    coefficients: np.ndarray
    residual_variance: float
    n: int

    def dense(self) -> np.ndarray:
        row = np.zeros(self.n)
        row[self.support] = self.coefficients
        return row


def standardize_columns(predictors):
    """Center columns and scale them to unit variance.

    Returns ``(Z, scale, constant)`` where ``constant`` flags zero-variance
    columns, which are left at 0 in Z.
    """
    X = np.asarray(predictors, dtype=float)
    Xc = X - X.mean(axis=0)
    scale = Xc.std(axis=0)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(X)))) if X.size else 0.0
    constant = scale <= tol
    safe = np.where(constant, 1.0, scale)
    Z = Xc / safe
    Z[:, constant] = 0.0
    return Z, safe, constant


def _check_inputs(target, predictors, d):
    y = np.asarray(target, dtype=float).ravel()
    X = np.asarray(predictors, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionError(f"predictors {X.shape} do not match target of length {y.size}")
    if d < 1:
        raise ValueError(f"target size must be >= 1, got {d}")
    return y, X


def sis_screen(target, predictors, d: int) -> np.ndarray:
    """Indices of the ``d`` predictors most correlated with the target.

    Ordered by decreasing absolute marginal correlation; ties keep the
    lower index first. Constant columns are never selected.
    """
    y, X = _check_inputs(target, predictors, d)
    n = X.shape[1]
    d = min(d, n)
    Z, _, constant = standardize_columns(X)
    if constant.any():
        warnings.warn(
            f"{int(constant.sum())} constant predictor column(s) excluded from screening",
            ScreeningWarning,
            stacklevel=2,
        )
    score = np.abs(Z.T @ (y - y.mean()))
    score[constant] = -np.inf
    order = np.argsort(-score, kind="stable")
    order = order[np.isfinite(score[order])]
    return order[:d]


def lars_screen(target, predictors, d: int) -> np.ndarray:
    """First ``d`` distinct variables to enter the least angle regression path.

    Plain LAR (no lasso drops) on standardized predictors and centered
    target. Only the entry order is kept. A variable whose column lies in
    the span of the active set is skipped with a ``ScreeningWarning``.
    The path stops early if the residual becomes orthogonal to every
    remaining predictor, so fewer than ``d`` indices may be returned.
    """
    y, X = _check_inputs(target, predictors, d)
    k, n = X.shape
    if d >= k:
        raise ValueError(f"target size {d} must be < k = {k}")
    Z, _, constant = standardize_columns(X)
    Z = Z / math.sqrt(k)  # unit-norm columns
    r = y - y.mean()
    excluded = constant.copy()
    if constant.any():
        warnings.warn(
            f"{int(constant.sum())} constant predictor column(s) excluded from screening",
            ScreeningWarning,
            stacklevel=2,
        )
    tiny = 1e-12 * max(1.0, float(np.linalg.norm(r)))
    active: List[int] = []

    c = Z.T @ r
    cand = np.where(excluded, -np.inf, np.abs(c))
    if not np.isfinite(cand).any() or cand.max() <= tiny:
        return np.array(active, dtype=int)
    active.append(int(np.argmax(cand)))

    while len(active) < min(d, n):
        c = Z.T @ r
        C = float(np.max(np.abs(c[active])))
        if C <= tiny:
            break
        s = np.sign(c[active])
        XA = Z[:, active] * s
        G = XA.T @ XA
        ones = np.ones(len(active))
        try:
            Ginv1 = np.linalg.solve(G, ones)
        except np.linalg.LinAlgError:
            Ginv1 = np.linalg.lstsq(G, ones, rcond=None)[0]
        AA = 1.0 / math.sqrt(float(ones @ Ginv1))
        u = XA @ (AA * Ginv1)
        a = Z.T @ u

        inactive = np.ones(n, dtype=bool)
        inactive[active] = False
        inactive &= ~excluded
        if not inactive.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = (C - c) / (AA - a)
            g2 = (C + c) / (AA + a)
        gam = np.full(n, np.inf)
        for g in (g1, g2):
            ok = inactive & np.isfinite(g) & (g > 1e-12 * C)
            gam = np.where(ok & (g < gam), g, gam)
        j = int(np.argmin(gam))
        if not np.isfinite(gam[j]):
            break
        r = r - gam[j] * u
        # collinear with the active set: skip it
        v = XA.T @ Z[:, j]
        zz = float(Z[:, j] @ Z[:, j])
        try:
            proj = float(v @ np.linalg.solve(G, v))
        except np.linalg.LinAlgError:
            proj = float(v @ np.linalg.lstsq(G, v, rcond=None)[0])
        if zz - proj <= 1e-10 * zz:
            warnings.warn(
                f"predictor {j} is collinear with the active set; dropped",
                ScreeningWarning,
                stacklevel=2,
            )
            excluded[j] = True
            continue
        active.append(j)
    return np.array(active, dtype=int)


def ols_refit(target, predictors, support) -> SparseRowEstimate:
    """Least-squares coefficients on ``support`` (intercept absorbed by centering)."""
    y = np.asarray(target, dtype=float).ravel()
    X = np.asarray(predictors, dtype=float)
    k, n = X.shape
    support = np.asarray(support, dtype=int).ravel()
    if support.size >= k:
        raise InsufficientDataError(f"support size {support.size} must be < k = {k}")
    yc = y - y.mean()
    if support.size == 0:
        return SparseRowEstimate(
            support=support, coefficients=np.zeros(0), residual_variance=float(yc @ yc) / (k - 1), n=n
        )
    Xs = X[:, support]
    Xs = Xs - Xs.mean(axis=0)
    coef, _, rank, _ = np.linalg.lstsq(Xs, yc, rcond=None)
    if rank < support.size:
        warnings.warn(
            f"selected design has rank {rank} < {support.size}; using minimum-norm solution",
            ScreeningWarning,
            stacklevel=2,
        )
    resid = yc - Xs @ coef
    dof = k - 1 - int(rank)
    rv = float(resid @ resid) / dof if dof > 0 else 0.0
    return SparseRowEstimate(support=support, coefficients=coef, residual_variance=rv, n=n)


def screen(target, predictors, d: int, method: str) -> np.ndarray:
    if method == "lars":
        return lars_screen(target, predictors, d)
    if method == "sis":
        return sis_screen(target, predictors, d)
    raise ValueError(f"unknown screening method {method!r}")


def sparse_rows(
    data: PairedDataset, config: Optional[ScreeningConfig] = None, direction=Direction.FORWARD
) -> List[SparseRowEstimate]:
    """Screen-then-refit estimates for every row of the structure matrix."""
    config = config or ScreeningConfig()
    direction = Direction(direction)
    cause, effect = (data.x, data.y) if direction is Direction.FORWARD else (data.y, data.x)
    k, n = cause.shape
    d = config.size_for(k)
    method = config.method_for(n, k)

    def fit(i):
        try:
            support = screen(effect[:, i], cause, d, method)
            return ols_refit(effect[:, i], cause, support)
        except (TraceMethodError, ValueError, np.linalg.LinAlgError) as exc:
            raise TraceMethodError(f"[{direction.label}] row {i}: {exc}") from exc

    rows = range(effect.shape[1])
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            return list(pool.map(fit, rows))
    return [fit(i) for i in rows]


def sparse_structure_estimate(
    data: PairedDataset, config: Optional[ScreeningConfig] = None, direction=Direction.FORWARD
) -> StructureEstimate:
    """Assemble the sparse structure matrix (effect dim x cause dim)."""
    direction = Direction(direction)
    rows = sparse_rows(data, config, direction)
    return StructureEstimate(a_hat=np.vstack([r.dense() for r in rows]), direction=direction)
