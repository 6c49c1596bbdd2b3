"""
The trace-condition statistic, its rotation null distribution, and the
four-way causal verdict.

For a putative cause C with sample covariance S_C and estimated structure
matrix A (effect = A cause), the empirical delta is

    log  tau(A S_C A^T) / ( (dim_C / r) * tau(A^T A) * tau(S_C) )

where tau is the normalized trace and r the rank of S_C. It is close to 0
in the causal direction and negative in the anti-causal one. Significance
is assessed by rotating S_C inside its own range with Haar-random
rotations and recomputing ``tau(A^T A R S_C R^T)``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInputError
from .estimators import (
    CovarianceSet,
    Direction,
    PairedDataset,
    StructureEstimate,
    covariances,
    structure_estimate,
)
from .matrix_core import haar_orthogonal_batch, normalized_trace
from .rng import SeedLike, generator, substream

DEFAULT_ALPHA = 0.01
DEFAULT_ROTATIONS = 1000
DEFAULT_EPSILON = 0.3

# max float64 entries held per batch of rotations (~256 MB)
_BATCH_ENTRIES = 32_000_000


class Verdict(str, enum.Enum):
    X_CAUSES_Y = "x_causes_y"
    Y_CAUSES_X = "y_causes_x"
    CONFOUNDED_OR_VIOLATED = "confounded_or_violated"
    UNDECIDED = "undecided"

    @property
    def message(self) -> str:
        return _VERDICT_MESSAGES[self]


_VERDICT_MESSAGES = {
    Verdict.X_CAUSES_Y: "X is the cause",
    Verdict.Y_CAUSES_X: "Y is the cause",
    Verdict.CONFOUNDED_OR_VIOLATED: "there is a confounder or the model assumptions are violated",
    Verdict.UNDECIDED: "cause cannot be identified",
}


@dataclass(frozen=True)
class DirectionalDelta:
    """One direction's delta and the traces it is built from."""

    direction: Direction
    delta: float
    numerator: float
    denominator: float
    rank: int
    cause_dim: int
    effect_dim: int


@dataclass(frozen=True)
class DeltaReport:
    delta_xy: float
    delta_yx: float
    numerator_xy: float
    denominator_xy: float
    numerator_yx: float
    denominator_yx: float
    rank_xy: int
    rank_yx: int
    n: int
    m: int

    @classmethod
    def from_halves(cls, fwd: DirectionalDelta, bwd: DirectionalDelta) -> "DeltaReport":
        return cls(
            delta_xy=fwd.delta,
            delta_yx=bwd.delta,
            numerator_xy=fwd.numerator,
            denominator_xy=fwd.denominator,
            numerator_yx=bwd.numerator,
            denominator_yx=bwd.denominator,
            rank_xy=fwd.rank,
            rank_yx=bwd.rank,
            n=fwd.cause_dim,
            m=fwd.effect_dim,
        )


@dataclass(frozen=True)
class NullDistribution:
    samples: np.ndarray
    observed: float

    @property
    def median(self) -> float:
        return float(np.median(self.samples))

    @property
    def count(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True)
class TestResult:
    p_xy: float
    p_yx: float
    alpha: float
    verdict: Verdict

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class EpsilonDecision:
    epsilon: float
    chosen: str  # "x_causes_y" | "y_causes_x" | "none"


@dataclass(frozen=True)
class InferenceResult:
    test: TestResult
    deltas: DeltaReport
    null_xy: NullDistribution
    null_yx: NullDistribution


def _check_direction(est: StructureEstimate, direction) -> Direction:
    direction = Direction(direction)
    if est.direction is not direction:
        raise ValueError(
            f"structure estimate is {est.direction.value}, requested {direction.value}"
        )
    return direction


def empirical_delta(cov: CovarianceSet, est: StructureEstimate, direction=None) -> DirectionalDelta:
    """Empirical delta for one direction.

    Each normalized trace divides by its own matrix dimension; the rank
    correction uses the dimension and rank of the cause covariance.
    """
    direction = _check_direction(est, direction if direction is not None else est.direction)
    sigma, eig = cov.regressor(direction)
    A = est.a_hat
    cause_dim = sigma.shape[0]
    effect_dim = A.shape[0]
    r = eig.rank
    if r < 1:
        raise DegenerateInputError("cause covariance has rank 0", direction.label)
    numerator = normalized_trace(A @ sigma @ A.T)
    denominator = (cause_dim / r) * normalized_trace(A.T @ A) * normalized_trace(sigma)
    if not (numerator > 0 and denominator > 0):
        raise DegenerateInputError(
            f"delta undefined: numerator={numerator!r}, denominator={denominator!r}",
            direction.label,
        )
    return DirectionalDelta(
        direction=direction,
        delta=math.log(numerator / denominator),
        numerator=numerator,
        denominator=denominator,
        rank=r,
        cause_dim=cause_dim,
        effect_dim=effect_dim,
    )


def _rotation_stats(M, s, dim, seed, start, stop):
    r = s.size
    G = np.empty((stop - start, r, r))
    for j, i in enumerate(range(start, stop)):
        G[j] = generator(seed, i).standard_normal((r, r))
    U = haar_orthogonal_batch(G)
    MU = np.matmul(M, U)
    # tr(M U S U^T) = sum_ij (M U)_ij U_ij s_j
    return np.einsum("nij,nij,j->n", MU, U, s) / dim


def null_sample(
    cov: CovarianceSet,
    est: StructureEstimate,
    count: int = DEFAULT_ROTATIONS,
    seed: SeedLike = 0,
    direction=None,
    threads: int = 1,
) -> NullDistribution:
    """Draw the rotation null distribution of ``tau(A^T A R S R^T)``.

    ``R = V U V^T`` where V spans the range of the cause covariance S and U
    is Haar on O(r). Draw ``i`` uses the substream ``(seed, i)``, so the
    samples are identical for any ``threads``.
    """
    direction = _check_direction(est, direction if direction is not None else est.direction)
    if count < 1:
        raise ValueError("count must be >= 1")
    sigma, eig = cov.regressor(direction)
    if eig.rank < 1:
        raise DegenerateInputError("cause covariance has rank 0", direction.label)
    dim = sigma.shape[0]
    A = est.a_hat
    V = eig.eigenvectors
    s = eig.eigenvalues
    AV = A @ V
    M = AV.T @ AV
    observed = float(np.sum(M.diagonal() * s)) / dim
    r = eig.rank
    batch = max(1, min(count, _BATCH_ENTRIES // (3 * r * r)))
    bounds = [(a, min(a + batch, count)) for a in range(0, count, batch)]
    if threads > 1 and len(bounds) == 1 and count > 1:
        step = math.ceil(count / threads)
        bounds = [(a, min(a + step, count)) for a in range(0, count, step)]
    ss = substream(seed)
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _rotation_stats(M, s, dim, ss, *b), bounds))
    else:
        parts = [_rotation_stats(M, s, dim, ss, *b) for b in bounds]
    return NullDistribution(samples=np.concatenate(parts), observed=observed)


def p_value(null: NullDistribution, pseudo_count: bool = False) -> float:
    """Two-sided Monte-Carlo p-value of the observed statistic.

    Counts samples on the observed value's side of the null median (ties
    with the observed value count), doubles, and clamps to 1. With
    ``pseudo_count`` the ratio ``(count + 1) / (N + 1)`` is used instead,
    which is never 0.
    """
    w = np.asarray(null.samples, dtype=float)
    N = w.size
    if N < 1:
        raise ValueError("null distribution is empty")
    obs = null.observed
    if obs <= np.median(w):
        c = int(np.count_nonzero(w <= obs))
    else:
        c = int(np.count_nonzero(w >= obs))
    p = 2.0 * (c + 1) / (N + 1) if pseudo_count else 2.0 * c / N
    return min(1.0, p)


def verdict(p_xy: float, p_yx: float, alpha: float) -> Verdict:
    if p_xy > alpha and p_yx < alpha:
        return Verdict.X_CAUSES_Y
    if p_yx > alpha and p_xy < alpha:
        return Verdict.Y_CAUSES_X
    if p_xy < alpha and p_yx < alpha:
        return Verdict.CONFOUNDED_OR_VIOLATED
    return Verdict.UNDECIDED


def epsilon_decide(report: DeltaReport, epsilon: float = DEFAULT_EPSILON) -> EpsilonDecision:
    """Pick the direction whose delta is closer to zero if the gap exceeds epsilon."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    dxy, dyx = report.delta_xy, report.delta_yx
    if not (math.isfinite(dxy) and math.isfinite(dyx)):
        raise ValueError("both deltas must be finite")
    if abs(dxy - dyx) <= epsilon:
        return EpsilonDecision(epsilon, "none")
    chosen = "x_causes_y" if abs(dxy) < abs(dyx) else "y_causes_x"
    return EpsilonDecision(epsilon, chosen)


def infer(
    data: PairedDataset,
    alpha: float = DEFAULT_ALPHA,
    rotations: int = DEFAULT_ROTATIONS,
    seed: SeedLike = 0,
    sparse: bool = False,
    screening=None,
    pseudo_count: bool = False,
    generic_rank: bool = False,
    threads: int = 1,
) -> InferenceResult:
    """Run the full test in both directions and return the verdict.

    Parameters
    ----------
    data : PairedDataset
    alpha : float
        Significance level.
    rotations : int
        Number of Haar rotations in each null distribution.
    seed : int or SeedSequence
        Root seed; the forward null uses substream 0, the backward null 1.
    sparse : bool
        Estimate the structure matrices by screening + least squares
        instead of the covariance pseudoinverse.
    screening : ScreeningConfig, optional
        Settings for the sparse estimator.
    pseudo_count : bool
        Use ``(count + 1) / (N + 1)`` p-values.
    generic_rank : bool
        Force covariance ranks to ``min(dim, k - 1)``.
    threads : int
        Worker threads for the rotation draws; does not change results.
    """
    cov = covariances(data, generic_rank=generic_rank)
    halves, nulls, pvals = [], [], []
    for key, direction in enumerate((Direction.FORWARD, Direction.BACKWARD)):
        if sparse:
            from .sparse_noisy import sparse_structure_estimate

            est = sparse_structure_estimate(data, screening, direction)
        else:
            est = structure_estimate(cov, direction)
        halves.append(empirical_delta(cov, est, direction))
        null = null_sample(cov, est, rotations, substream(seed, key), direction, threads=threads)
        nulls.append(null)
        pvals.append(p_value(null, pseudo_count=pseudo_count))
    test = TestResult(p_xy=pvals[0], p_yx=pvals[1], alpha=alpha, verdict=verdict(pvals[0], pvals[1], alpha))
    return InferenceResult(
        test=test,
        deltas=DeltaReport.from_halves(*halves),
        null_xy=nulls[0],
        null_yx=nulls[1],
    )
