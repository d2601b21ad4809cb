"""Counter-based SplitMix64 streams.

Every random draw in the package comes from a :class:`SplitMix64` stream
identified by ``(seed, stream_id)``.  The generator is the plain SplitMix64
sequence, evaluated in vectorised form: output ``k`` (``k >= 1``) of a stream
with starting state ``s`` is ``mix(s + k * GAMMA)`` in wrapping 64-bit
arithmetic.  Normal deviates use the Box-Muller transform on 53-bit uniforms,
so an implementation in any language with IEEE doubles and a correctly
rounded ``log``/``cos``/``sin`` reproduces the same numbers.
"""
from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1
_TRIAL_SALT = 0x5452_4941_4C53_4545

# stream identifiers
PROCESS = 1
OBSERVATION = 2
INITIAL = 3


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
        return z ^ (z >> np.uint64(31))


def derive_seed(base_seed: int, index: int) -> int:
    """Seed for the ``index``-th independent experiment under ``base_seed``."""
    state = _mix_int(base_seed ^ _TRIAL_SALT)
    return _mix_int(state + GAMMA * (index + 1))


class SplitMix64:
    """A single SplitMix64 stream.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed.
    stream : int
        Stream identifier; different identifiers give statistically
        independent sequences for the same seed.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or seed > _MASK:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.stream = int(stream)
        self._state = _mix_int(self.seed + GAMMA * (self.stream + 1))
        self._counter = 0

    def uint64(self, size: int) -> np.ndarray:
        """Next ``size`` raw 64-bit outputs."""
        k = np.arange(self._counter + 1, self._counter + size + 1, dtype=np.uint64)
        self._counter += size
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + k * np.uint64(GAMMA)
        return _mix_array(z)

    def uniform(self, size: int) -> np.ndarray:
        """Uniform doubles on ``[0, 1)`` with 53 random bits."""
        return (self.uint64(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, size: int | tuple[int, ...]) -> np.ndarray:
        """Standard normal deviates, filled in C order."""
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        raw = self.uint64(2 * pairs) >> np.uint64(11)
        u1 = (raw[0::2].astype(np.float64) + 1.0) * 2.0**-53  # (0, 1]
        u2 = raw[1::2].astype(np.float64) * 2.0**-53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count].reshape(shape)

    def complex_normal(self, shape: int | tuple[int, ...], sigma: float = 1.0) -> np.ndarray:
        """Circular complex Gaussian with ``E|z|^2 = sigma**2``.

        Real and imaginary parts are independent, each with standard
        deviation ``sigma / sqrt(2)``.
        """
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        parts = self.normal(shape + (2,)) * (sigma / np.sqrt(2.0))
        return parts[..., 0] + 1j * parts[..., 1]
