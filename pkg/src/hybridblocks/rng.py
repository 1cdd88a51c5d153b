"""Deterministic random numbers for experiment synthesis.

A 64-bit seed is expanded with splitmix64 into the 256-bit state of an
xoshiro256** generator. Standard normals come from the polar Box-Muller
method; each accepted attempt consumes two uniforms (u, v) and yields two
normals (u-scaled emitted first, v-scaled second or cached as a spare).
The same seed always reproduces the same stream, whether values are drawn
one at a time or in bulk.
"""

import numpy as np

from . import kernels

_MASK64 = (1 << 64) - 1


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


class Generator:
    """xoshiro256** stream with a cached Box-Muller spare."""

    def __init__(self, seed: int):
        seed = int(seed) & _MASK64
        self.seed = seed
        words = []
        x = seed
        for _ in range(4):
            x, w = _splitmix64(x)
            words.append(w)
        if not any(words):  # all-zero state is the lone forbidden point
            words[0] = 1
        self._state = np.array(words, dtype=np.uint64)
        self._cache = np.zeros(2)

    def normals(self, n: int) -> np.ndarray:
        out = np.empty(int(n))
        kernels.rng_fill(self._state, self._cache, out)
        return out

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def uniforms(self, n: int) -> np.ndarray:
        out = np.empty(int(n))
        kernels.uniform_fill(self._state, out)
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def shuffled_indices(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n) driven by the uniform stream."""
        idx = np.arange(n)
        u = self.uniforms(max(n - 1, 0))
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            if j > i:  # guards u == 1.0 rounding
                j = i
            idx[i], idx[j] = idx[j], idx[i]
        return idx


def derive_seeds(master: int, n: int) -> list:
    """Expand a master seed into n decorrelated substream seeds."""
    x = int(master) & _MASK64
    out = []
    for _ in range(n):
        x, w = _splitmix64(x ^ 0xA5A5A5A5A5A5A5A5)
        out.append(w)
    return out


def prng_new(seed: int) -> Generator:
    return Generator(seed)


def prng_normal(gen: Generator) -> float:
    return gen.normal()
