import numpy as np
import pytest

from subdmd import systems

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Record one acceptance verdict for the terminal summary."""

    def _record(criterion: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_stable(n: int, seed: int, radius: float = 0.95) -> np.ndarray:
    """Real n x n matrix with distinct eigenvalues inside |z| < radius."""
    rs = np.random.default_rng(seed)
    a = rs.standard_normal((n, n))
    return a * (radius / np.max(np.abs(np.linalg.eigvals(a))))


def simulate_noiseless(a: np.ndarray, x0, m: int) -> np.ndarray:
    """Forward simulation by repeated multiplication (oracle for the simulators)."""
    x = np.empty((a.shape[0], m), dtype=np.complex128)
    x[:, 0] = x0
    for t in range(1, m):
        x[:, t] = a @ x[:, t - 1]
    return x


def rotating_linear(r: float) -> systems.LTISpec:
    lam = r * 1j
    return systems.LTISpec(np.diag([lam, np.conj(lam)]), [1.0, 1.0])


def sorted_eigs(values) -> np.ndarray:
    values = np.asarray(values)
    key = np.round(values, 8)
    return values[np.lexsort((key.imag, key.real))]
