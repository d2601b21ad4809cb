"""Reference random dynamical systems and noisy observables.

Three simulators are provided: a linear time-invariant system with additive
process and observation noise, the discretised stochastic Stuart-Landau
oscillator in polar coordinates (observed through trigonometric
observables), and the stochastic viscous Burgers equation on ``[0, 1]``.

Noise convention: a noise level ``sigma`` is the standard deviation of each
channel.  Real-valued channels receive real Gaussian noise with variance
``sigma**2``; complex-valued channels receive circular complex Gaussian
noise with ``E|w|^2 = sigma**2`` (real and imaginary parts independent, each
with variance ``sigma**2 / 2``).  Hence the per-channel covariance is always
``sigma**2``.

Every random draw comes from a :class:`~subdmd.rng.SplitMix64` stream keyed by
the seed in :class:`NoiseSpec` and a stream identifier (process noise,
observation noise, initial conditions).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.signal

from . import numkit, rng
from .dmd import SnapshotMatrix
from .errors import DimensionError, NumericalError, ParameterError

R_MIN = 1e-6
DIVERGENCE_LIMIT = 1e3


@dataclass(frozen=True)
class NoiseSpec:
    sigma_p: float = 0.0
    sigma_o: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_p < 0 or self.sigma_o < 0:
            raise ParameterError("noise levels must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class LTISpec:
    """``x_t = a @ x_{t-1} + e_t`` observed through ``y_t = x_t + w_t``."""

    a: np.ndarray
    x0: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        a = numkit.as_matrix(self.a, "a")
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"a must be square, got {a.shape}")
        x0 = np.asarray(self.x0, dtype=np.complex128).reshape(-1)
        if x0.shape[0] != a.shape[0]:
            raise DimensionError(f"x0 has length {x0.shape[0]}, a is {a.shape}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def is_real(self) -> bool:
        return not (np.any(self.a.imag) or np.any(self.x0.imag))


@dataclass(frozen=True)
class StuartLandauSpec:
    """Polar-coordinate Stuart-Landau oscillator.

    The first ``burn_in`` steps (default ``round(10 / dt)``) are simulated and
    discarded before recording.
    """

    mu: float = 1.0
    gamma: float = 1.0
    beta: float = 0.0
    dt: float = 0.01
    r0: float = 1.0
    theta0: float = 0.0
    orders: tuple[int, ...] = tuple(range(-10, 11))
    burn_in: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not self.r0 > 0:
            raise ParameterError(f"r0 must be positive, got {self.r0}")
        object.__setattr__(self, "orders", tuple(int(k) for k in self.orders))
        if not self.orders:
            raise ParameterError("orders must be nonempty")

    @property
    def burn_in_steps(self) -> int:
        return int(round(10.0 / self.dt)) if self.burn_in is None else int(self.burn_in)


@dataclass(frozen=True)
class BurgersSpec:
    """Stochastic viscous Burgers equation on ``[0, 1]`` with zero Dirichlet ends.

    ``u0`` defaults to ``sin(2 pi x)`` on the grid.
    """

    k: float = 0.01
    dx: float = 1e-2
    dt_solver: float = 5e-5
    t_end: float = 1.0
    sample_stride: int = 1
    u0: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.k > 0:
            raise ParameterError(f"k must be positive, got {self.k}")
        if not (self.dx > 0 and self.dt_solver > 0 and self.t_end > 0):
            raise ParameterError("dx, dt_solver and t_end must be positive")
        if self.sample_stride < 1:
            raise ParameterError(f"sample_stride must be >= 1, got {self.sample_stride}")
        cells = 1.0 / self.dx
        if abs(cells - round(cells)) > 1e-9 * cells or round(cells) < 2:
            raise ParameterError(f"dx={self.dx} does not divide [0, 1] evenly")
        steps = self.t_end / self.dt_solver
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ParameterError(f"dt_solver={self.dt_solver} does not divide t_end={self.t_end}")
        if self.u0 is not None:
            u0 = np.asarray(self.u0, dtype=np.float64).reshape(-1)
            if u0.shape[0] != self.n_grid:
                raise DimensionError(f"u0 needs {self.n_grid} values, got {u0.shape[0]}")
            object.__setattr__(self, "u0", u0)

    @property
    def n_grid(self) -> int:
        return int(round(1.0 / self.dx)) + 1

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt_solver))

    @property
    def n_snapshots(self) -> int:
        return self.n_steps // self.sample_stride + 1

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_grid)


@dataclass(frozen=True)
class MomentModel:
    """Analytic second moments of a noisy linear system.

    ``k_op`` is the operator, ``g_cov`` the stationary covariance of the
    noise-free observable, ``p_cov`` / ``q_cov`` the process / observation
    noise covariances, ``r_cross`` their cross covariance and
    ``d = k_op @ g_cov + r_cross`` the lag-one moment of the noisy data.
    """

    k_op: np.ndarray
    g_cov: np.ndarray
    p_cov: np.ndarray
    q_cov: np.ndarray
    r_cross: np.ndarray
    d: np.ndarray

    def lagged(self, tau: int) -> np.ndarray:
        """Expected lag-``tau`` moment of the noisy observations."""
        if tau == 0:
            return self.g_cov + self.q_cov
        return np.linalg.matrix_power(self.k_op, tau - 1) @ self.d


def _noise(stream: rng.SplitMix64, shape, sigma: float, real: bool) -> np.ndarray:
    if real:
        return stream.normal(shape) * sigma
    return stream.complex_normal(shape, sigma)


def add_observation_noise(y: SnapshotMatrix, sigma_o: float, seed: int) -> SnapshotMatrix:
    """Return ``y`` plus white observation noise of per-channel std ``sigma_o``.

    Data whose imaginary parts are all zero get real noise; otherwise the
    noise is circular complex.  ``sigma_o == 0`` returns the data unchanged.
    """
    if sigma_o < 0:
        raise ParameterError(f"sigma_o must be nonnegative, got {sigma_o}")
    if sigma_o == 0:
        return SnapshotMatrix(y.data.copy(), y.dt)
    stream = rng.SplitMix64(seed, rng.OBSERVATION)
    real = not np.any(y.data.imag)
    # drawn time-major so that prefixes of a longer run agree
    w = _noise(stream, (y.m, y.n), sigma_o, real).T
    return SnapshotMatrix(y.data + w, y.dt)


def lti_trajectory(spec: LTISpec, noise: NoiseSpec, m: int) -> SnapshotMatrix:
    """Simulate ``m`` noisy observations of a linear system, starting at ``x0``.

    Column 0 is ``x0`` plus observation noise.  Real systems (real ``a`` and
    ``x0``) receive real noise, complex systems circular complex noise.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    a, n, real = spec.a, spec.n, spec.is_real
    e = np.zeros((m, n), dtype=np.complex128)
    if noise.sigma_p > 0 and m > 1:
        e[1:] = _noise(rng.SplitMix64(noise.seed, rng.PROCESS), (m - 1, n), noise.sigma_p, real)
    e[0] = spec.x0
    if np.count_nonzero(a - np.diag(np.diagonal(a))) == 0:
        # x_t = a_ii x_{t-1} + e_t as a first-order recursive filter per channel
        x = np.empty((n, m), dtype=np.complex128)
        for i in range(n):
            x[i] = scipy.signal.lfilter([1.0], [1.0, -a[i, i]], e[:, i])
    else:
        x = np.empty((n, m), dtype=np.complex128)
        x[:, 0] = spec.x0
        for t in range(1, m):
            x[:, t] = a @ x[:, t - 1] + e[t]
    if real:
        x = x.real.astype(np.complex128)
    y = SnapshotMatrix(x, spec.dt)
    if noise.sigma_o > 0:
        y = add_observation_noise(y, noise.sigma_o, noise.seed)
    return y


def lti_moment_model(spec: LTISpec, noise: NoiseSpec) -> MomentModel:
    """Second-moment model of :func:`lti_trajectory` in its stationary regime.

    Raises
    ------
    NumericalError
        If ``a`` is not stable.
    """
    n = spec.n
    eye = np.eye(n, dtype=np.complex128)
    p_cov = noise.sigma_p**2 * eye
    q_cov = noise.sigma_o**2 * eye
    r_cross = np.zeros((n, n), dtype=np.complex128)
    if numkit.spectral_radius(spec.a) >= 1.0:
        raise NumericalError("unstable system, no stationary covariance")
    if noise.sigma_p == 0:
        g_cov = np.zeros((n, n), dtype=np.complex128)
    else:
        g_cov = numkit.lyapunov_stationary_cov(spec.a, p_cov)
    return MomentModel(spec.a.copy(), g_cov, p_cov, q_cov, r_cross, spec.a @ g_cov + r_cross)


def stuart_landau_trajectory(spec: StuartLandauSpec, noise: NoiseSpec, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Radius and phase of the noisy polar Stuart-Landau map.

    ``r <- r + (mu r - r^3) dt + dt e_r`` and
    ``theta <- theta + (gamma - beta r^2) dt + (dt / r) e_theta`` with
    ``e_r, e_theta`` iid normal of std ``sigma_p``.  The radius is floored at
    ``R_MIN``.  Returns the ``m`` samples after the burn-in.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    total = spec.burn_in_steps + m
    steps = total - 1
    if noise.sigma_p > 0:
        e = rng.SplitMix64(noise.seed, rng.PROCESS).normal((steps, 2)) * noise.sigma_p
    else:
        e = np.zeros((steps, 2))
    r = np.empty(total)
    theta = np.empty(total)
    r[0], theta[0] = spec.r0, spec.theta0
    mu, gamma, beta, dt = spec.mu, spec.gamma, spec.beta, spec.dt
    rt, th = float(spec.r0), float(spec.theta0)
    for t in range(steps):
        r_next = rt + (mu * rt - rt**3) * dt + dt * e[t, 0]
        th = th + (gamma - beta * rt**2) * dt + (dt / rt) * e[t, 1]
        rt = max(r_next, R_MIN)
        r[t + 1], theta[t + 1] = rt, th
    burn = spec.burn_in_steps
    return r[burn:], theta[burn:]


def trig_observe(theta, orders=tuple(range(-10, 11)), sigma_o: float = 0.0, seed: int = 0,
                 dt: float = 1.0) -> SnapshotMatrix:
    """Observables ``exp(1j * k * theta_t)`` for ``k`` in ``orders`` plus noise."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    orders = np.asarray(tuple(orders), dtype=np.float64)
    if orders.size == 0:
        raise ParameterError("orders must be nonempty")
    data = np.exp(1j * orders[:, None] * theta[None, :])
    y = SnapshotMatrix(data, dt)
    if sigma_o > 0:
        stream = rng.SplitMix64(seed, rng.OBSERVATION)
        w = stream.complex_normal((y.m, y.n), sigma_o).T
        y = SnapshotMatrix(y.data + w, dt)
    return y


def stuart_landau_snapshots(spec: StuartLandauSpec, noise: NoiseSpec, m: int) -> SnapshotMatrix:
    """Trigonometric observations of a Stuart-Landau trajectory."""
    _, theta = stuart_landau_trajectory(spec, noise, m)
    return trig_observe(theta, spec.orders, noise.sigma_o, noise.seed, dt=spec.dt)


def burgers_solve(spec: BurgersSpec, noise: NoiseSpec) -> SnapshotMatrix:
    """Crank-Nicolson-Maruyama solution of the stochastic Burgers equation.

    Diffusion is treated with Crank-Nicolson (tridiagonal solve), advection
    ``u u_x`` explicitly with centred differences, and the space-time white
    noise as ``sigma_p * sqrt(dt / dx) * xi`` per interior node.  The full
    grid, boundary nodes included, is recorded every ``sample_stride``
    steps; observation noise from ``noise.sigma_o`` is added afterwards.

    Raises
    ------
    NumericalError
        If ``|u|`` exceeds ``DIVERGENCE_LIMIT``.
    """
    n = spec.n_grid
    x = spec.grid
    u = np.sin(2.0 * np.pi * x) if spec.u0 is None else spec.u0.copy()
    u[0] = u[-1] = 0.0
    interior = n - 2
    nu = spec.k * spec.dt_solver / spec.dx**2
    ab = np.zeros((3, interior))
    ab[0, 1:] = -0.5 * nu
    ab[1, :] = 1.0 + nu
    ab[2, :-1] = -0.5 * nu
    lu_band = scipy.linalg.cholesky_banded(ab[:2].copy())  # symmetric positive definite
    noise_gain = noise.sigma_p * np.sqrt(spec.dt_solver / spec.dx)
    stream = rng.SplitMix64(noise.seed, rng.PROCESS) if noise.sigma_p > 0 else None
    out = np.empty((n, spec.n_snapshots))
    out[:, 0] = u
    col = 1
    dt, dx = spec.dt_solver, spec.dx
    for step in range(1, spec.n_steps + 1):
        ui = u[1:-1]
        left, right = u[:-2], u[2:]
        rhs = ui + 0.5 * nu * (left - 2.0 * ui + right) - dt * ui * (right - left) / (2.0 * dx)
        if stream is not None:
            rhs = rhs + noise_gain * stream.normal(interior)
        u = np.concatenate(([0.0], scipy.linalg.cho_solve_banded((lu_band, False), rhs), [0.0]))
        if not np.all(np.abs(u) <= DIVERGENCE_LIMIT):
            raise NumericalError("solver diverged, reduce dt")
        if step % spec.sample_stride == 0:
            out[:, col] = u
            col += 1
    y = SnapshotMatrix(out, spec.dt_solver * spec.sample_stride)
    if noise.sigma_o > 0:
        y = add_observation_noise(y, noise.sigma_o, noise.seed)
    return y
