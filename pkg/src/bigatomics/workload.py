"""Deterministic per-thread workload generation: Zipfian rank sampling and
key derivation.

The sampler draws ranks in [0, n) with P(rank i) proportional to
(i+1)^(-z); z = 0 is uniform.  The normalization constant is computed by
direct summation at setup.  Draws are deterministic per (seed, thread).
"""

from __future__ import annotations

import numpy as np

from .hashtable import mix64

_M64 = (1 << 64) - 1


def thread_seed(seed: int, thread_index: int) -> int:
    return mix64((seed & _M64) ^ mix64(thread_index + 1))


class ZipfianSampler:
    """Inverse-CDF sampler over ranks 1..n with exponent z, 0 <= z <= 1."""

    def __init__(self, n: int, z: float):
        if n < 1:
            raise ValueError("n must be >= 1")
        if z < 0:
            raise ValueError("z must be >= 0")
        self.n = n
        self.z = z
        if z == 0.0 or n == 1:
            self._cum = None
            self.norm = float(n)
        else:
            weights = np.arange(1, n + 1, dtype=np.float64) ** (-z)
            self._cum = np.cumsum(weights)
            self.norm = float(self._cum[-1])

    def probability(self, rank: int) -> float:
        """P(rank), 0-based."""
        if self._cum is None:
            return 1.0 / self.n
        return float((rank + 1) ** (-self.z)) / self.norm

    def sample_batch(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """`count` ranks in [0, n), deterministic per generator state."""
        if self._cum is None:
            return rng.integers(0, self.n, size=count, dtype=np.int64)
        u = rng.random(count) * self.norm
        return np.searchsorted(self._cum, u, side="left")

    def sample(self, rng: np.random.Generator) -> int:
        return int(self.sample_batch(rng, 1)[0])


def rank_to_key(rank: int) -> int:
    """Stable 64-bit key for a rank; spreads adjacent ranks apart."""
    return mix64(rank + 1)
