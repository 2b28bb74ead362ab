"""Deterministic, platform-independent random number generation.

Every stochastic step in the package draws from :class:`Rng`, a splitmix64
generator.  The state update is ``state += 0x9E3779B97F4A7C15`` (mod 2**64)
and each output is the splitmix64 finalizer of the new state, so a block of
n outputs can be produced vectorially from ``finalize(state + GAMMA * [1..n])``
bit-for-bit identically to n sequential calls.

Independent streams (one per dataset sample, one per generated image, ...)
are derived with :func:`derive_stream`, which hashes (seed, index...) through
the same finalizer.  Nothing here depends on numpy's random module, so runs
reproduce across platforms and numpy versions.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _finalize_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def derive_stream(seed: int, *indices: int) -> int:
    """Derive a child seed from a root seed and one or more stream indices.

    child = finalize(... finalize(finalize(seed) ^ finalize(index0 + 1)) ...)
    """
    state = _finalize(seed & _MASK64)
    for idx in indices:
        state = _finalize(state ^ _finalize((idx + 1) & _MASK64))
    return state


class Rng:
    """splitmix64 stream with bulk (vectorized) and scalar draws."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._state = self.seed

    def spawn(self, *indices: int) -> "Rng":
        """Independent child stream; does not advance this stream."""
        return Rng(derive_stream(self.seed, *indices))

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return _finalize(self._state)

    def u64_block(self, n: int) -> np.ndarray:
        """n outputs, bitwise identical to n calls of next_u64."""
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self._state) + np.uint64(_GAMMA) * steps
        self._state = (self._state + n * _GAMMA) & _MASK64
        return _finalize_array(states)

    def random(self, shape: int | tuple[int, ...] | None = None) -> np.ndarray | float:
        """Uniform float64 in [0, 1) using the top 53 bits of each output."""
        if shape is None:
            return (self.next_u64() >> 11) * 2.0**-53
        n = int(np.prod(shape))
        vals = (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return vals.reshape(shape)

    def uniform(
        self, low: float, high: float, shape: int | tuple[int, ...] | None = None
    ) -> np.ndarray | float:
        return low + (high - low) * self.random(shape)

    def below(self, n: int) -> int:
        """Integer in [0, n) by 128-bit multiply-shift."""
        return (self.next_u64() * n) >> 64

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation: argsort of fresh u64 keys (stable)."""
        keys = self.u64_block(n)
        return np.argsort(keys, kind="stable")

    def choice(self, n: int, k: int) -> np.ndarray:
        """First k positions of a fresh permutation of range(n)."""
        if k > n:
            raise ValueError(f"cannot choose {k} from {n}")
        return self.permutation(n)[:k]
