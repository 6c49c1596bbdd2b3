"""
Sample covariances and the pseudoinverse structure-matrix estimator.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, InsufficientDataError
from .matrix_core import TruncatedEig, pseudoinverse, symmetrize, truncated_eig


class Direction(str, enum.Enum):
    FORWARD = "forward"  # X -> Y
    BACKWARD = "backward"  # Y -> X

    @property
    def label(self) -> str:
        return "X->Y" if self is Direction.FORWARD else "Y->X"


@dataclass(frozen=True)
class PairedDataset:
    """k joint observations of X (dim n) and Y (dim m), one sample per row."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if x.ndim != 2 or y.ndim != 2:
            raise DimensionError("x and y must be 2-d arrays (samples x dims)")
        if x.shape[0] != y.shape[0]:
            raise DimensionError(
                f"x has {x.shape[0]} samples but y has {y.shape[0]}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def k(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.y.shape[1]

    def swapped(self) -> "PairedDataset":
        return PairedDataset(self.y, self.x)


@dataclass(frozen=True)
class CovarianceSet:
    """Centered sample covariances (divisor k - 1) and their decompositions."""

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_yx: np.ndarray
    eig_x: TruncatedEig = field(repr=False)
    eig_y: TruncatedEig = field(repr=False)
    k: int = 0

    @property
    def sigma_xy(self) -> np.ndarray:
        return self.sigma_yx.T

    @property
    def rank_x(self) -> int:
        return self.eig_x.rank

    @property
    def rank_y(self) -> int:
        return self.eig_y.rank

    @property
    def n(self) -> int:
        return self.sigma_x.shape[0]

    @property
    def m(self) -> int:
        return self.sigma_y.shape[0]

    def regressor(self, direction: Direction):
        """(covariance, decomposition) of the putative cause."""
        if Direction(direction) is Direction.FORWARD:
            return self.sigma_x, self.eig_x
        return self.sigma_y, self.eig_y

    def cross(self, direction: Direction) -> np.ndarray:
        """Cross-covariance effect-by-cause for the given direction."""
        if Direction(direction) is Direction.FORWARD:
            return self.sigma_yx
        return self.sigma_xy


@dataclass(frozen=True)
class StructureEstimate:
    a_hat: np.ndarray
    direction: Direction


def covariances(data: PairedDataset, generic_rank: bool = False) -> CovarianceSet:
    """Estimate Sigma_X, Sigma_Y and Sigma_YX from paired samples.

    Parameters
    ----------
    data : PairedDataset
    generic_rank : bool
        If True, take the rank of each covariance to be ``min(dim, k - 1)``
        (the almost-sure value for continuous data) instead of the
        numerical-rank cutoff.
    """
    k = data.k
    if k < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {k}")
    xc = data.x - data.x.mean(axis=0)
    yc = data.y - data.y.mean(axis=0)
    sigma_x = symmetrize(xc.T @ xc / (k - 1))
    sigma_y = symmetrize(yc.T @ yc / (k - 1))
    sigma_yx = yc.T @ xc / (k - 1)
    rx = min(data.n, k - 1) if generic_rank else None
    ry = min(data.m, k - 1) if generic_rank else None
    return CovarianceSet(
        sigma_x=sigma_x,
        sigma_y=sigma_y,
        sigma_yx=sigma_yx,
        eig_x=truncated_eig(sigma_x, rank=rx, check_symmetric=False),
        eig_y=truncated_eig(sigma_y, rank=ry, check_symmetric=False),
        k=k,
    )


def structure_estimate(cov: CovarianceSet, direction=Direction.FORWARD) -> StructureEstimate:
    """Regress the effect on the cause through the covariance pseudoinverse.

    Forward gives ``Sigma_YX Sigma_X^+`` (m x n); backward gives
    ``Sigma_XY Sigma_Y^+`` (n x m).
    """
    direction = Direction(direction)
    sigma, eig = cov.regressor(direction)
    a_hat = cov.cross(direction) @ pseudoinverse(sigma, eig=eig)
    return StructureEstimate(a_hat=a_hat, direction=direction)
