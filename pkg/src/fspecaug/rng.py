"""SplitMix64 generator shared by every random draw in the package.

SplitMix64 is counter based: the n-th output after seeding with ``s`` is
``mix64(s + n * GAMMA)``. That lets the vectorised paths below produce exactly
the same stream as repeated scalar calls, which is what keeps archives
identical between the fast and slow code paths (and other implementations).
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U64_GAMMA = np.uint64(GAMMA)
_U64_M1 = np.uint64(_M1)
_U64_M2 = np.uint64(_M2)
_TWO_POW_M53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """SplitMix64 output finaliser on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64
    z = (z ^ (z >> np.uint64(30))) * _U64_M1
    z = (z ^ (z >> np.uint64(27))) * _U64_M2
    return z ^ (z >> np.uint64(31))


class Rng:
    """SplitMix64 state. Every method advances ``state`` deterministically."""

    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = seed & MASK64

    def __repr__(self) -> str:
        return f"Rng(state=0x{self.state:016x})"

    def copy(self) -> "Rng":
        return Rng(self.state)

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def next_u64_array(self, n: int) -> np.ndarray:
        """The next ``n`` outputs as a uint64 array (same values as ``n`` scalar calls)."""
        if n < 0:
            raise ValueError("n must be non-negative")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        states = np.uint64(self.state) + steps * _U64_GAMMA
        self.state = (self.state + n * GAMMA) & MASK64
        return _mix64_array(states)

    def uniform_int(self, lo: int, hi: int) -> int:
        """Inclusive integer in ``[lo, hi]`` as ``lo + (u mod (hi - lo + 1))``."""
        if lo > hi:
            raise ValueError(f"empty range: lo={lo} > hi={hi}")
        return lo + self.next_u64() % (hi - lo + 1)

    def uniform_int_array(self, lo: int, hi: int, n: int) -> np.ndarray:
        if lo > hi:
            raise ValueError(f"empty range: lo={lo} > hi={hi}")
        u = self.next_u64_array(n)
        return lo + (u % np.uint64(hi - lo + 1)).astype(np.int64)

    def uniform(self) -> float:
        """Double in [0, 1) from the top 53 bits of one output."""
        return (self.next_u64() >> 11) * _TWO_POW_M53

    def uniforms(self, n: int) -> np.ndarray:
        return (self.next_u64_array(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53

    def standard_normal(self, n: int) -> np.ndarray:
        """``n`` standard normals by Box-Muller.

        Consumes ``2 * ceil(n / 2)`` outputs as pairs ``(a, b)``; with
        ``u1 = 1 - uniform(a)`` (so ``u1`` is in (0, 1]) and ``u2 = uniform(b)``
        each pair yields ``r*cos(2*pi*u2), r*sin(2*pi*u2)``, ``r = sqrt(-2 ln u1)``,
        interleaved in that order. An odd trailing value is discarded.
        """
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        u1 = 1.0 - u[0::2]
        u2 = u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(theta)
        out[1::2] = radius * np.sin(theta)
        return out[:n]


def uniform_int(rng: Rng, lo: int, hi: int) -> int:
    return rng.uniform_int(lo, hi)


def batch_rng(master_seed: int, batch_index: int) -> Rng:
    """Independent stream for one batch: ``mix64(seed XOR batch_index * GAMMA)``."""
    scrambled = (int(batch_index) * GAMMA) & MASK64
    return Rng(mix64((int(master_seed) & MASK64) ^ scrambled))
