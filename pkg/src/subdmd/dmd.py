"""Dynamic mode decomposition estimators.

Four estimators share one output type, :class:`DmdOutcome`:

* :func:`standard_dmd` -- SVD-based exact DMD on the pair ``(Y0, Y1)``;
* :func:`tls_dmd` -- total-least-squares DMD on the stacked pair;
* :func:`moment_corrected_dmd` -- second-moment estimate with the known
  observation-noise covariance removed (noise-corrected DMD);
* :func:`subspace_dmd` -- projects the future block ``[Y2; Y3]`` onto the row
  space of the past block ``[Y0; Y1]`` and reads the operator off the column
  space of the projection.  Consistent for the stochastic Koopman operator
  when both process and observation noise are present.

Conventions applied to every outcome: each mode has unit 2-norm and its
largest-magnitude entry is real positive; eigenvalues are sorted by
descending magnitude, then by descending imaginary part; eigenvalues below
``ZERO_CUTOFF * max|lambda|`` are dropped together with their modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .errors import DimensionError, NumericalError, ParameterError

ZERO_CUTOFF = 1e-10

METHODS = ("standard", "tls", "moment_corrected", "subspace")


@dataclass(frozen=True)
class SnapshotMatrix:
    """Equispaced observations, one column per time step.

    Parameters
    ----------
    data : ndarray, shape (n, m)
        Column ``j`` holds the observable values at time index ``j``.
    dt : float
        Sampling interval.
    """

    data: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2:
            raise DimensionError(f"snapshot data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1:
            raise DimensionError("snapshot data needs at least one channel")
        if not np.all(np.isfinite(data)):
            raise ParameterError("snapshot data contains non-finite entries")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DmdOutcome:
    """Eigenvalues and dynamic modes returned by every estimator.

    ``operator_factors`` holds ``(left, right)`` with the full ``n x n``
    operator estimate equal to ``left @ right``; keeping it factored avoids
    materialising a dense ``n x n`` matrix for wide data.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    retained_rank: int
    method: str
    dt: float = 1.0
    left_vectors: np.ndarray | None = None
    operator_factors: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def continuous_eigenvalues(self) -> np.ndarray:
        return to_continuous(self.eigenvalues, self.dt)

    def operator(self) -> np.ndarray:
        """Dense operator estimate in the coordinates of the observables."""
        if self.operator_factors is None:
            raise NumericalError(f"{self.method} outcome carries no operator estimate")
        left, right = self.operator_factors
        return left @ right


def _check_pair(y0, y1) -> tuple[np.ndarray, np.ndarray]:
    y0 = numkit.as_matrix(y0, "y0")
    y1 = numkit.as_matrix(y1, "y1")
    if y0.shape != y1.shape:
        raise DimensionError(f"y0 and y1 differ in shape: {y0.shape} vs {y1.shape}")
    return y0, y1


def _as_snapshots(y) -> SnapshotMatrix:
    return y if isinstance(y, SnapshotMatrix) else SnapshotMatrix(np.asarray(y))


def normalize_modes(modes: np.ndarray) -> np.ndarray:
    """Unit-norm columns whose largest-magnitude entry is real positive."""
    modes = np.array(modes, dtype=np.complex128)
    norms = np.linalg.norm(modes, axis=0)
    modes = modes / np.where(norms > 0, norms, 1.0)
    if modes.size:
        pivot = modes[np.argmax(np.abs(modes), axis=0), np.arange(modes.shape[1])]
        mag = np.abs(pivot)
        modes = modes / np.where(mag > 0, pivot / np.where(mag > 0, mag, 1.0), 1.0)
    return modes


def _finish(values, modes, left, *, rank, method, dt, factors) -> DmdOutcome:
    """Drop near-zero eigenvalues, normalise, sort."""
    values = np.asarray(values, dtype=np.complex128)
    scale = np.max(np.abs(values), initial=0.0)
    if scale == 0.0:
        raise NumericalError("rank zero: all eigenvalues vanish")
    keep = np.abs(values) >= ZERO_CUTOFF * scale
    values, modes = values[keep], modes[:, keep]
    left = None if left is None else left[:, keep]
    order = np.lexsort((-values.imag, -np.abs(values)))
    values, modes = values[order], normalize_modes(modes[:, order])
    if left is not None:
        left = left[:, order]
        overlap = np.einsum("ij,ij->j", left.conj(), modes)
        left = left / np.where(np.abs(overlap) > 1e-12, overlap.conj(), 1.0)
    return DmdOutcome(values, modes, rank, method, dt, left, factors)


def _reduce(f: numkit.SvdFactors, bottom: np.ndarray, *, method, dt) -> DmdOutcome:
    """Reduced-operator step shared by all SVD-based estimators.

    ``f`` factors the "before" block ``U S V^H``; ``bottom`` is the matching
    "after" block.  Forms ``A_tilde = U^H bottom V S^-1`` and lifts its
    eigenvectors through ``bottom V S^-1``, dividing by the eigenvalue.
    """
    lift = (bottom @ f.v) / f.s
    a_tilde = f.u.conj().T @ lift
    e = numkit.eig(a_tilde)
    with np.errstate(divide="ignore", invalid="ignore"):
        modes = (lift @ e.right) / e.values
    return _finish(e.values, modes, f.u @ e.left, rank=f.k, method=method, dt=dt,
                   factors=(lift, f.u.conj().T))


def build_pair(y) -> tuple[np.ndarray, np.ndarray]:
    """Split snapshots into ``Y0`` (columns ``0..m-2``) and ``Y1`` (``1..m-1``)."""
    y = _as_snapshots(y)
    if y.m < 2:
        raise ParameterError(f"insufficient snapshots: need m >= 2, got {y.m}")
    return y.data[:, :-1], y.data[:, 1:]


def standard_dmd(y0, y1, rank: int | None = None, dt: float = 1.0) -> DmdOutcome:
    """Exact DMD through the (optionally truncated) SVD of ``y0``.

    Parameters
    ----------
    y0, y1 : array_like, shape (n, m)
        Snapshot pair with ``y1[:, j]`` one step after ``y0[:, j]``.
    rank : int, optional
        Truncation rank of the POD step.  Default keeps the numerical rank.
    dt : float
        Sampling interval, carried into the outcome.

    Returns
    -------
    DmdOutcome
    """
    y0, y1 = _check_pair(y0, y1)
    f = numkit.compact_svd(y0) if rank is None else numkit.truncated_svd(y0, rank)
    return _reduce(f, y1, method="standard", dt=dt)


def tls_dmd(y0, y1, rank: int | None = None, dt: float = 1.0) -> DmdOutcome:
    """Total-least-squares DMD.

    The leading ``r`` left singular vectors of ``Z = [y0; y1]`` are split into
    an upper block ``U11`` and a lower block ``U21`` (``n x r`` each) and the
    operator is ``U21 @ pinv(U11)``.  ``r`` defaults to
    ``min(n, rank(Z))``.

    Raises
    ------
    NumericalError
        If ``U11`` is rank deficient ("tls projection singular").
    """
    y0, y1 = _check_pair(y0, y1)
    n = y0.shape[0]
    z = np.vstack([y0, y1])
    f = numkit.compact_svd(z)
    r = min(n, f.k) if rank is None else rank
    if r < 1 or r > n:
        raise ParameterError(f"tls rank must lie in [1, {n}], got {r}")
    r = min(r, f.k)
    u = f.u[:, :r]
    try:
        top = numkit.compact_svd(u[:n])
    except NumericalError:
        top = None
    if top is None or top.k < r:
        raise NumericalError("tls projection singular")
    return _reduce(top, u[n:], method="tls", dt=dt)


def noise_psd_tolerance(q_cov: np.ndarray, m: int) -> float:
    """Allowed negative eigenvalue of ``H0 - Q`` before the data are rejected.

    Sampling fluctuation of an ``n``-channel white-noise covariance estimated
    from ``m`` columns has relative size about ``2 sqrt(n/m) + n/m``.
    """
    n = q_cov.shape[0]
    ratio = n / m
    return float(np.linalg.norm(q_cov, 2)) * (2.0 * np.sqrt(ratio) + ratio) + 1e-12


def moment_corrected_dmd(y0, y1, q_cov, dt: float = 1.0, psd_tol: float | None = None) -> DmdOutcome:
    """Noise-corrected DMD: ``A = H1 @ pinv(H0 - Q)``.

    ``H0 = y0 y0^H / m`` and ``H1 = y1 y0^H / m``.  ``q_cov`` is the known
    observation-noise covariance; a scalar noise level ``sigma`` corresponds
    to ``sigma**2 * I``.

    Raises
    ------
    NumericalError
        If ``H0 - Q`` has an eigenvalue below ``-psd_tol`` ("noise covariance
        too large for data").
    """
    y0, y1 = _check_pair(y0, y1)
    n, m = y0.shape
    q_cov = numkit.as_matrix(q_cov, "q_cov")
    if q_cov.shape != (n, n):
        raise DimensionError(f"q_cov must be {n}x{n}, got {q_cov.shape}")
    h0 = (y0 @ y0.conj().T) / m
    h1 = (y1 @ y0.conj().T) / m
    corrected = h0 - q_cov
    corrected = 0.5 * (corrected + corrected.conj().T)
    tol = noise_psd_tolerance(q_cov, m) if psd_tol is None else psd_tol
    if np.linalg.eigvalsh(corrected)[0] < -tol:
        raise NumericalError("noise covariance too large for data")
    a_hat = h1 @ numkit.pinv(corrected)
    e = numkit.eig(a_hat)
    rank = int(np.count_nonzero(np.abs(e.values) >= ZERO_CUTOFF * np.max(np.abs(e.values), initial=0.0)))
    return _finish(e.values, e.right, e.left, rank=rank, method="moment_corrected", dt=dt,
                   factors=(a_hat, np.eye(n, dtype=np.complex128)))


def build_past_future(y) -> tuple[np.ndarray, np.ndarray]:
    """Past and future blocks ``[Y0; Y1]`` and ``[Y2; Y3]``.

    With ``m' = m - 3``, ``Y_t`` holds columns ``t .. t + m' - 1``.
    """
    y = _as_snapshots(y)
    if y.m < 5:
        raise ParameterError(
            f"insufficient snapshots for quadruple: need m >= 5, got {y.m}"
        )
    w = y.m - 3
    blocks = [y.data[:, t:t + w] for t in range(4)]
    return np.vstack(blocks[:2]), np.vstack(blocks[2:])


def _projection_left_factors(y, rank):
    """Left singular factors of the projection ``O`` with the retained rank."""
    y = _as_snapshots(y)
    y_p, y_f = build_past_future(y)
    try:
        basis = numkit.row_space_basis(y_p)
    except NumericalError:
        raise NumericalError("rank zero: past block vanishes") from None
    # O = (y_f @ basis) @ basis^H, so O shares its left factors with y_f @ basis
    small = y_f @ basis
    u, s, _ = np.linalg.svd(small, full_matrices=False)
    tol = numkit.default_rank_tol(y_f.shape, s[0] if s.size else 0.0)
    q = int(np.count_nonzero(s > tol))
    if q < 1:
        raise NumericalError("rank zero: projection of future onto past vanishes")
    n = y.n
    if rank is None:
        k = min(n, q)
    else:
        if rank < 1 or rank > 2 * n:
            raise ParameterError(f"rank must lie in [1, {2 * n}], got {rank}")
        k = min(rank, q)
    return u[:, :k], s[:k], n


def subspace_operator(y, rank: int | None = None) -> np.ndarray:
    """Dense estimate ``U_q2 @ pinv(U_q1)`` of the stochastic Koopman matrix."""
    u_q, _, n = _projection_left_factors(y, rank)
    return u_q[n:] @ numkit.pinv(u_q[:n])


def subspace_dmd(y, rank: int | None = None) -> DmdOutcome:
    """Subspace DMD.

    Steps: stack past/future blocks, project the future rows onto the row
    space of the past, take the leading left singular vectors ``U_q`` of the
    projection, split them into upper and lower ``n``-row blocks and extract
    eigenvalues and modes of ``U_q2 @ pinv(U_q1)`` through the SVD of
    ``U_q1``.

    Parameters
    ----------
    y : SnapshotMatrix or array_like, shape (n, m)
        Observations; ``m >= 5``.
    rank : int, optional
        Number of columns of ``U_q`` kept (truncated SVD of the projection).
        Defaults to ``min(n, rank(O))``: in the large-sample limit the
        projection has rank ``n``, while on finite noisy data its numerical
        rank is ``2n`` and keeping all columns makes ``U_q`` square unitary,
        which collapses the operator to zero.

    Returns
    -------
    DmdOutcome
    """
    y = _as_snapshots(y)
    u_q, _, n = _projection_left_factors(y, rank)
    return _reduce(numkit.compact_svd(u_q[:n]), u_q[n:], method="subspace", dt=y.dt)


def to_continuous(lam, dt: float):
    """Continuous-time eigenvalue ``log(lam) / dt`` (principal branch)."""
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    lam_arr = np.asarray(lam, dtype=np.complex128)
    if np.any(lam_arr == 0):
        raise ParameterError("no continuous-time counterpart for a zero eigenvalue")
    out = np.log(lam_arr) / dt
    return out[()] if out.ndim == 0 else out


def amplitudes(outcome: DmdOutcome, y_init, return_residual: bool = False):
    """Least-squares amplitudes ``a`` with ``modes @ a ~= y_init``.

    ``a[i]`` plays the role of the eigenfunction value at the initial state.

    Raises
    ------
    NumericalError
        If the modes are linearly dependent ("amplitudes not identifiable").
    """
    modes = outcome.modes
    y_init = np.asarray(y_init, dtype=np.complex128).reshape(-1)
    if y_init.shape[0] != modes.shape[0]:
        raise DimensionError(f"y_init has length {y_init.shape[0]}, modes have {modes.shape[0]} rows")
    f = numkit.compact_svd(modes)
    if f.k < modes.shape[1]:
        raise NumericalError("amplitudes not identifiable: modes are rank deficient")
    amps = (f.v / f.s) @ (f.u.conj().T @ y_init)
    if return_residual:
        return amps, float(np.linalg.norm(modes @ amps - y_init))
    return amps


def reconstruct(outcome: DmdOutcome, amps, t):
    """Modal reconstruction ``sum_i lambda_i**t * amps_i * w_i``.

    ``t`` may be an integer (returns a vector) or a sequence of integers
    (returns an ``n x len(t)`` matrix).
    """
    amps = np.asarray(amps, dtype=np.complex128)
    if amps.shape != outcome.eigenvalues.shape:
        raise DimensionError(f"need {outcome.eigenvalues.size} amplitudes, got {amps.size}")
    t_arr = np.asarray(t)
    powers = outcome.eigenvalues[:, None] ** t_arr.reshape(1, -1)
    out = outcome.modes @ (powers * amps[:, None])
    return out[:, 0] if t_arr.ndim == 0 else out


def run_method(method: str, y, *, rank: int | None = None, q_cov=None, sigma_o: float | None = None) -> DmdOutcome:
    """Dispatch by method tag (``standard``, ``tls``, ``nc``/``moment_corrected``, ``subspace``)."""
    y = _as_snapshots(y)
    if method == "subspace":
        return subspace_dmd(y, rank)
    y0, y1 = build_pair(y)
    if method == "standard":
        return standard_dmd(y0, y1, rank, dt=y.dt)
    if method == "tls":
        return tls_dmd(y0, y1, rank, dt=y.dt)
    if method in ("nc", "moment_corrected"):
        if q_cov is None:
            if sigma_o is None:
                raise ParameterError("nc method needs sigma_o or q_cov")
            q_cov = sigma_o**2 * np.eye(y.n)
        return moment_corrected_dmd(y0, y1, q_cov, dt=y.dt)
    raise ParameterError(f"unknown method {method!r}")
