"""Dense complex linear-algebra primitives.

All routines are pure functions of their inputs.  Matrices are 2-D numpy
arrays; they are promoted to ``complex128`` on entry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, ParameterError

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SvdFactors:
    """Thin singular value decomposition ``m = u @ diag(s) @ v.conj().T``.

    ``u`` is ``rows x k`` and ``v`` is ``cols x k``, both with orthonormal
    columns; ``s`` is positive and nonincreasing.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    @property
    def k(self) -> int:
        return self.s.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.conj().T


@dataclass(frozen=True)
class EigResult:
    """Eigenvalues with right and left eigenvectors.

    Right vectors (columns of ``right``) have unit norm.  When ``simple`` is
    true the left vectors are scaled so that ``left[:, i].conj() @ right[:, i]
    == 1``; otherwise they only have unit norm.
    """

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray
    simple: bool


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and promote ``m`` to a finite 2-D complex array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must have at least one row and column, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} contains non-finite entries")
    return a


def default_rank_tol(shape: tuple[int, int], s_max: float) -> float:
    """Numerical-rank floor ``max(rows, cols) * eps * s_max``."""
    return max(shape) * EPS * s_max


def _svd(a: np.ndarray):
    try:
        return np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails where the slower gesvd converges
        return scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")


def compact_svd(m, rank_tol: float | None = None) -> SvdFactors:
    """Compact SVD keeping the singular values above ``rank_tol``.

    Parameters
    ----------
    m : array_like
        Finite 2-D matrix.
    rank_tol : float, optional
        Singular values ``<= rank_tol`` are discarded.  Defaults to
        :func:`default_rank_tol`.

    Raises
    ------
    NumericalError
        If no singular value survives ("rank zero").
    """
    a = as_matrix(m)
    u, s, vh = _svd(a)
    if rank_tol is None:
        rank_tol = default_rank_tol(a.shape, s[0] if s.size else 0.0)
    elif rank_tol < 0:
        raise ParameterError(f"rank_tol must be nonnegative, got {rank_tol}")
    k = int(np.count_nonzero(s > rank_tol))
    if k == 0:
        raise NumericalError("rank zero: matrix has no nonzero singular value")
    return SvdFactors(u[:, :k], s[:k].copy(), vh[:k].conj().T)


def truncated_svd(m, rank: int) -> SvdFactors:
    """Leading ``min(rank, numerical rank)`` singular triplets of ``m``."""
    a = as_matrix(m)
    if rank < 1 or rank > min(a.shape):
        raise ParameterError(f"rank must lie in [1, {min(a.shape)}], got {rank}")
    f = compact_svd(a)
    if rank >= f.k:
        return f
    return SvdFactors(f.u[:, :rank], f.s[:rank], f.v[:, :rank])


def pinv(m, rank_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse through :func:`compact_svd`."""
    a = as_matrix(m)
    try:
        f = compact_svd(a, rank_tol)
    except NumericalError:
        return np.zeros((a.shape[1], a.shape[0]), dtype=np.complex128)
    return (f.v / f.s) @ f.u.conj().T


def row_space_basis(p, rank_tol: float | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) whose conjugate spans the rows of ``p``.

    With ``v = row_space_basis(p)``, the orthogonal projector onto the row
    space of ``p`` acts on row vectors as ``x @ v @ v.conj().T``.
    """
    return compact_svd(p, rank_tol).v


def row_space_projection(f, p, rank_tol: float | None = None) -> np.ndarray:
    """Project each row of ``f`` orthogonally onto the row space of ``p``.

    The projector is built from an orthonormal basis of the row space of
    ``p`` (rank-revealing SVD), never from ``inv(p @ p^H)``.
    """
    f = as_matrix(f, "f")
    p = as_matrix(p, "p")
    if f.shape[1] != p.shape[1]:
        raise DimensionError(
            f"column counts differ: f has {f.shape[1]}, p has {p.shape[1]}"
        )
    try:
        v = row_space_basis(p, rank_tol)
    except NumericalError:
        return np.zeros_like(f)
    return (f @ v) @ v.conj().T


def _min_gap(values: np.ndarray) -> float:
    if values.size < 2:
        return np.inf
    d = np.abs(values[:, None] - values[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def eig(a) -> EigResult:
    """Eigendecomposition with biorthogonally scaled left vectors.

    A spectrum is treated as non-simple when two eigenvalues lie within
    ``1e3 * sqrt(eps) * max(1, ||a||)`` of each other or when some pair of
    unit left/right vectors is numerically orthogonal (the signature of a
    defective eigenvalue).  In that case no biorthogonal scaling is applied.

    Raises
    ------
    numpy.linalg.LinAlgError
        If LAPACK fails to converge.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"eig needs a square matrix, got {a.shape}")
    values, left, right = scipy.linalg.eig(a, left=True, right=True)
    right = right / np.linalg.norm(right, axis=0)
    left = left / np.linalg.norm(left, axis=0)
    overlap = np.einsum("ij,ij->j", left.conj(), right)
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    simple = bool(
        _min_gap(values) > 1e3 * np.sqrt(EPS) * scale
        and np.min(np.abs(overlap), initial=np.inf) > 1e-6
    )
    if simple:
        left = left / overlap.conj()
    return EigResult(values, right, left, simple)


def spectral_radius(a) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(as_matrix(a)))))


def lyapunov_stationary_cov(a, p_cov) -> np.ndarray:
    """Solve ``G = a G a^H + p_cov`` for a stable ``a``.

    Raises
    ------
    NumericalError
        If the spectral radius of ``a`` is not below one.
    """
    a = as_matrix(a, "a")
    p_cov = as_matrix(p_cov, "p_cov")
    if a.shape[0] != a.shape[1] or p_cov.shape != a.shape:
        raise DimensionError(f"need square a and p_cov of equal shape, got {a.shape}, {p_cov.shape}")
    if not np.allclose(p_cov, p_cov.conj().T, atol=1e-12 * max(1.0, np.abs(p_cov).max())):
        raise ParameterError("p_cov must be Hermitian")
    if spectral_radius(a) >= 1.0:
        raise NumericalError("unstable system, no stationary covariance")
    g = scipy.linalg.solve_discrete_lyapunov(a, p_cov)
    g = 0.5 * (g + g.conj().T)
    residual = np.linalg.norm(a @ g @ a.conj().T + p_cov - g)
    if residual > 1e-10 * max(np.linalg.norm(g), np.linalg.norm(p_cov), 1e-300):
        raise NumericalError(f"Lyapunov solve inaccurate (residual {residual:.3e})")
    return g
