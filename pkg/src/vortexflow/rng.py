"""64-bit linear congruential generator used for every seeded test.

x_{n+1} = a x_n + c mod 2^64. Uniform doubles take the top 53 bits, so a
seed reproduces the same sequence in any language.
"""

from __future__ import annotations

import numpy as np

A = 6364136223846793005
C = 1442695040888963407
MASK = (1 << 64) - 1
DEFAULT_SEED = 42


class LCG:
    def __init__(self, seed: int = DEFAULT_SEED):
        self.state = int(seed) & MASK

    def next_u64(self) -> int:
        self.state = (A * self.state + C) & MASK
        return self.state

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        if size is None:
            return low + (high - low) * (self.next_u64() >> 11) * 2.0 ** -53
        n = int(np.prod(size))
        vals = np.array([self.next_u64() >> 11 for _ in range(n)], dtype=float) * 2.0 ** -53
        return (low + (high - low) * vals).reshape(size)

    def normal(self, size=None):
        """Box-Muller on pairs of uniforms."""
        n = 1 if size is None else int(np.prod(size))
        u1 = 1.0 - self.uniform(size=(n,))
        u2 = self.uniform(size=(n,))
        z = np.sqrt(-2 * np.log(u1)) * np.cos(2 * np.pi * u2)
        return float(z[0]) if size is None else z.reshape(size)

    def integer(self, low: int, high: int) -> int:
        """Uniform integer in [low, high)."""
        return low + int(self.uniform() * (high - low))
