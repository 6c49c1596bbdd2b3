"""
Dense symmetric linear algebra used throughout the package.

Normalized traces, truncated eigendecompositions of PSD matrices, the
Moore-Penrose pseudoinverse built from them, and Haar-distributed random
orthogonal matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, NumericalError

SYMMETRY_ATOL = 1e-12


def _as_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    return M


def normalized_trace(M) -> float:
    """Trace of a square matrix divided by its dimension."""
    M = _as_square(M)
    return float(np.trace(M)) / M.shape[0]


def symmetrize(M) -> np.ndarray:
    """Return ``(M + M^T) / 2`` after checking M is square."""
    M = _as_square(M)
    return 0.5 * (M + M.T)


def is_symmetric(M, atol: float = SYMMETRY_ATOL) -> bool:
    M = _as_square(M)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    return bool(np.allclose(M, M.T, rtol=0.0, atol=atol * scale))


@dataclass(frozen=True)
class TruncatedEig:
    """Eigenpairs of a symmetric matrix above a rank cutoff.

    Attributes
    ----------
    eigenvalues : ndarray, shape (rank,)
        Retained eigenvalues, nonincreasing.
    eigenvectors : ndarray, shape (source_dim, rank)
        Orthonormal columns spanning the retained subspace.
    rank : int
    source_dim : int
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    source_dim: int

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the retained subspace."""
        V = self.eigenvectors
        return V @ V.T


def rank_cutoff(eigenvalues: np.ndarray, dim: int) -> float:
    """Numerical-rank threshold ``dim * eps * max(eigenvalue)``."""
    if eigenvalues.size == 0:
        return 0.0
    lam_max = max(float(np.max(eigenvalues)), 0.0)
    return dim * np.finfo(float).eps * lam_max


def truncated_eig(M, rank: Optional[int] = None, check_symmetric: bool = True) -> TruncatedEig:
    """Eigendecomposition of a symmetric matrix truncated at its numerical rank.

    Parameters
    ----------
    M : array_like, shape (n, n)
        Symmetric matrix (typically a sample covariance).
    rank : int, optional
        Force the number of retained eigenpairs instead of applying the
        ``dim * eps * lambda_max`` cutoff. Useful when the rank is known
        in advance, e.g. ``k - 1`` for a centered covariance of ``k``
        generic samples.
    check_symmetric : bool
        Raise ``DimensionError`` if M is not symmetric to 1e-12.

    Returns
    -------
    TruncatedEig
    """
    M = _as_square(M)
    n = M.shape[0]
    if check_symmetric and not is_symmetric(M):
        raise DimensionError("matrix is not symmetric")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix contains non-finite entries", diagnostics={"dim": n})
    try:
        w, V = np.linalg.eigh(symmetrize(M))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver did not converge: {exc}",
            diagnostics={"dim": n, "fro_norm": float(np.linalg.norm(M))},
        ) from exc
    order = np.argsort(w)[::-1]
    w = w[order]
    V = V[:, order]
    if rank is None:
        keep = int(np.count_nonzero(w > rank_cutoff(w, n)))
    else:
        if not 0 <= rank <= n:
            raise DimensionError(f"forced rank {rank} outside [0, {n}]")
        keep = int(rank)
    return TruncatedEig(
        eigenvalues=w[:keep].copy(),
        eigenvectors=V[:, :keep].copy(),
        rank=keep,
        source_dim=n,
    )


def pseudoinverse(M, eig: Optional[TruncatedEig] = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse ``V S^{-1} V^T`` of a symmetric PSD matrix.

    A precomputed ``TruncatedEig`` of M may be passed to skip the
    decomposition.
    """
    if eig is None:
        eig = truncated_eig(M)
    V = eig.eigenvectors
    return (V / eig.eigenvalues) @ V.T


def haar_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a Haar-distributed matrix from O(dim).

    QR of a standard Gaussian matrix, with the columns of Q rescaled by the
    signs of diag(R) so the factorization is unique and the law is exactly
    Haar.
    """
    if dim < 1:
        raise DimensionError(f"dim must be >= 1, got {dim}")
    Z = rng.standard_normal((dim, dim))
    return _qr_haar(Z)


def _qr_haar(Z: np.ndarray) -> np.ndarray:
    # works on a single matrix or a stack (..., d, d)
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d = np.where(d == 0, 1.0, d)
    return Q * d[..., None, :]


def haar_orthogonal_batch(gaussians: np.ndarray) -> np.ndarray:
    """Map a stack of i.i.d. standard Gaussian (d, d) matrices to Haar draws.

    Lets callers generate each Gaussian block from its own random stream and
    still factorize the whole stack in one call.
    """
    gaussians = np.asarray(gaussians, dtype=float)
    if gaussians.ndim != 3 or gaussians.shape[1] != gaussians.shape[2]:
        raise DimensionError(f"expected shape (N, d, d), got {gaussians.shape}")
    return _qr_haar(gaussians)
