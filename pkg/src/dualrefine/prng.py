"""Portable seeded generator used for every fixture the package produces.

The algorithm is xorshift64* (Vigna, 2016) with shifts (12, 25, 27) and
multiplier 0x2545F4914F6CDD1D. The 64-bit state is initialised from the
integer seed with one splitmix64 step, so seed 0 is legal. Doubles take the
top 53 bits of each output; normals come from the cosine branch of the
Box-Muller transform (one normal per two uniforms). Any implementation
that follows these four rules reproduces the same streams bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D


def splitmix64(value: int) -> int:
    z = (value + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class XorShift64Star:
    def __init__(self, seed: int):
        state = splitmix64(int(seed) & _MASK)
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & _MASK

    def uniform(self) -> float:
        """Double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)

    def uniform_array(self, shape, low=0.0, high=1.0) -> np.ndarray:
        n = int(np.prod(shape))
        out = np.fromiter((self.uniform() for _ in range(n)), dtype=np.float64, count=n)
        return (low + (high - low) * out).reshape(shape)

    def normal_array(self, shape, scale=1.0) -> np.ndarray:
        n = int(np.prod(shape))
        out = np.fromiter((self.normal() for _ in range(n)), dtype=np.float64, count=n)
        return (scale * out).reshape(shape)

    def randint(self, low: int, high: int) -> int:
        """Integer in [low, high)."""
        return low + int(self.uniform() * (high - low))
