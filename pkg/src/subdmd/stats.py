"""Empirical moments, eigenvalue matching and the Monte Carlo harness."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import dmd, rng, systems
from .errors import DimensionError, DmdError, ParameterError

INTERVAL_CONVENTION = "axis-aligned empirical 2.5/97.5 percentiles per real/imag component"


@dataclass(frozen=True)
class EigenPairing:
    """Optimal partial bijection between estimated and true eigenvalues.

    ``pairs`` lists ``(estimated_index, truth_index, distance)``.
    """

    pairs: list[tuple[int, int, float]]
    unmatched_estimated: list[int]
    unmatched_truth: list[int]

    @property
    def total_distance(self) -> float:
        return float(sum(d for _, _, d in self.pairs))

    def estimate_for(self, truth_index: int) -> int | None:
        for i, j, _ in self.pairs:
            if j == truth_index:
                return i
        return None


def empirical_moment(y_a, y_b) -> np.ndarray:
    """``y_a @ y_b^H / m`` for matrices with ``m`` columns each."""
    y_a = np.asarray(y_a, dtype=np.complex128)
    y_b = np.asarray(y_b, dtype=np.complex128)
    if y_a.ndim != 2 or y_b.ndim != 2 or y_a.shape[1] != y_b.shape[1]:
        raise DimensionError(f"column counts differ: {y_a.shape} vs {y_b.shape}")
    if y_a.shape[1] < 1:
        raise DimensionError("need at least one column")
    return (y_a @ y_b.conj().T) / y_a.shape[1]


def lagged_moment(y, tau: int, m: int | None = None) -> np.ndarray:
    """Empirical lag-``tau`` moment ``Y_tau Y_0^H / m`` of a snapshot matrix.

    ``Y_t`` holds columns ``t .. t + m - 1``; ``m`` defaults to the largest
    value that fits.
    """
    data = y.data if isinstance(y, dmd.SnapshotMatrix) else np.asarray(y)
    if m is None:
        m = data.shape[1] - tau
    if tau < 0 or m < 1 or tau + m > data.shape[1]:
        raise ParameterError(f"lag {tau} with {m} columns exceeds {data.shape[1]} snapshots")
    return empirical_moment(data[:, tau:tau + m], data[:, :m])


def match_eigenvalues(estimated, truth) -> EigenPairing:
    """Pair eigenvalues minimising the total distance ``sum |est - truth|``."""
    est = np.atleast_1d(np.asarray(estimated, dtype=np.complex128))
    tru = np.atleast_1d(np.asarray(truth, dtype=np.complex128))
    if est.size == 0 or tru.size == 0:
        raise ParameterError("eigenvalue lists must be nonempty")
    cost = np.abs(est[:, None] - tru[None, :])
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(i), int(j), float(cost[i, j])) for i, j in zip(rows, cols)]
    pairs.sort(key=lambda p: p[1])
    return EigenPairing(
        pairs,
        sorted(set(range(est.size)) - set(int(i) for i in rows)),
        sorted(set(range(tru.size)) - set(int(j) for j in cols)),
    )


def relative_error(est, truth) -> float:
    """``|est - truth| / |truth|``."""
    if truth == 0:
        raise ParameterError("relative error undefined for a zero true eigenvalue")
    return float(abs(est - truth) / abs(truth))


@dataclass(frozen=True)
class ExperimentConfig:
    """Description of a Monte Carlo eigenvalue study.

    ``system`` is one of :class:`~subdmd.systems.LTISpec`,
    :class:`~subdmd.systems.StuartLandauSpec` or
    :class:`~subdmd.systems.BurgersSpec`.  The seed of trial ``t`` is
    ``derive_seed(base_seed, t)``; ``noise.seed`` is ignored.
    ``truth`` defaults to the eigenvalues of ``a`` for linear systems.
    """

    system: object
    noise: systems.NoiseSpec
    method: str = "subspace"
    m: int = 1000
    trials: int = 100
    base_seed: int = 0
    rank: int | None = None
    q_cov: np.ndarray | None = field(default=None, repr=False)
    truth: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in ("standard", "tls", "nc", "moment_corrected", "subspace"):
            raise ParameterError(f"unknown method {self.method!r}")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.m < 2:
            raise ParameterError(f"m must be >= 2, got {self.m}")
        if self.truth is not None:
            object.__setattr__(self, "truth", np.atleast_1d(np.asarray(self.truth, dtype=np.complex128)))
        elif not isinstance(self.system, systems.LTISpec):
            raise ParameterError("truth eigenvalues are required for non-linear systems")

    def truth_values(self) -> np.ndarray:
        if self.truth is not None:
            return self.truth
        return np.linalg.eigvals(self.system.a)

    def trial_seed(self, trial: int) -> int:
        return rng.derive_seed(self.base_seed, trial)

    def generate(self, trial: int) -> dmd.SnapshotMatrix:
        noise = replace(self.noise, seed=self.trial_seed(trial))
        sys = self.system
        if isinstance(sys, systems.LTISpec):
            return systems.lti_trajectory(sys, noise, self.m)
        if isinstance(sys, systems.StuartLandauSpec):
            return systems.stuart_landau_snapshots(sys, noise, self.m)
        if isinstance(sys, systems.BurgersSpec):
            return systems.burgers_solve(sys, noise)
        raise ParameterError(f"unsupported system {type(sys).__name__}")


@dataclass(frozen=True)
class TrialStats:
    """Aggregated eigenvalue estimates over Monte Carlo trials.

    ``estimates`` and ``errors`` are ``trials x k`` arrays (``k`` true
    eigenvalues) with NaN where a trial failed or left a true eigenvalue
    unmatched.  ``interval`` rows are ``(re_lo, re_hi, im_lo, im_hi)``.
    """

    truth: np.ndarray
    mean: np.ndarray
    interval: np.ndarray
    median_error: np.ndarray
    estimates: np.ndarray
    errors: np.ndarray
    trials: int
    failed: list[int]

    @property
    def succeeded(self) -> int:
        return self.trials - len(self.failed)

    def contains(self, index: int, value: complex | None = None) -> bool:
        """Whether ``value`` (default: the true eigenvalue) lies in the box."""
        value = self.truth[index] if value is None else value
        re_lo, re_hi, im_lo, im_hi = self.interval[index]
        return bool(re_lo <= value.real <= re_hi and im_lo <= value.imag <= im_hi)


def _one_trial(config: ExperimentConfig, trial: int, truth: np.ndarray):
    try:
        y = config.generate(trial)
        outcome = dmd.run_method(config.method, y, rank=config.rank, q_cov=config.q_cov,
                                 sigma_o=config.noise.sigma_o)
    except (DmdError, np.linalg.LinAlgError):
        return None
    pairing = match_eigenvalues(outcome.eigenvalues, truth)
    est = np.full(truth.size, np.nan + 1j * np.nan)
    for i, j, _ in pairing.pairs:
        est[j] = outcome.eigenvalues[i]
    return est


def _worker_count(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("KOOPMAN_THREADS")
        workers = int(env) if env else 1
    return max(1, workers)


def run_trials(config: ExperimentConfig, workers: int | None = None) -> TrialStats:
    """Run every trial of ``config`` and aggregate matched eigenvalues.

    Trials are independent (seeded by index) and may run on ``workers``
    threads (default from ``KOOPMAN_THREADS``, else 1); the aggregation is a
    reduction keyed by trial index, so the result does not depend on the
    worker count.  Trials whose decomposition fails are excluded and listed
    in ``failed``.
    """
    truth = config.truth_values()
    if np.any(truth == 0):
        raise ParameterError("true eigenvalues must be nonzero")
    indices = range(config.trials)
    workers = _worker_count(workers)
    if workers == 1:
        results = [_one_trial(config, t, truth) for t in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _one_trial(config, t, truth), indices))
    failed = [t for t, r in enumerate(results) if r is None]
    estimates = np.full((config.trials, truth.size), np.nan + 1j * np.nan)
    for t, r in enumerate(results):
        if r is not None:
            estimates[t] = r
    errors = np.abs(estimates - truth[None, :]) / np.abs(truth)[None, :]
    return summarize(truth, estimates, errors, failed)


def summarize(truth, estimates, errors, failed) -> TrialStats:
    k = truth.size
    mean = np.full(k, np.nan + 1j * np.nan)
    interval = np.full((k, 4), np.nan)
    median = np.full(k, np.nan)
    for j in range(k):
        col = estimates[:, j]
        ok = ~np.isnan(col.real)
        if not ok.any():
            continue
        col = col[ok]
        mean[j] = col.mean()
        re_lo, re_hi = np.percentile(col.real, [2.5, 97.5])
        im_lo, im_hi = np.percentile(col.imag, [2.5, 97.5])
        interval[j] = (re_lo, re_hi, im_lo, im_hi)
        median[j] = np.median(errors[ok, j])
    return TrialStats(truth, mean, interval, median, estimates, errors, estimates.shape[0], list(failed))
