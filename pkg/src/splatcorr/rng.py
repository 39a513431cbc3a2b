"""Deterministic random number generation for the synthetic harness.

Every random draw in the package goes through :class:`Xoshiro256StarStar`,
a straight implementation of the xoshiro256** algorithm (Blackman & Vigna)
seeded through splitmix64.  The generator is pure integer arithmetic on
64-bit words, so streams are reproducible across platforms and numpy
versions, which is what the golden tests and the byte-identical pipeline
report rely on.
"""

from __future__ import annotations

import math

_MASK = 0xFFFFFFFFFFFFFFFF


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256StarStar:
    """xoshiro256** with splitmix64 seed expansion.

    The raw stream is 64-bit unsigned integers.  Floats are derived by
    taking the top 53 bits, the standard way to fill a double's mantissa.
    """

    def __init__(self, seed: int):
        sm = seed & _MASK
        state = []
        for _ in range(4):
            sm, word = _splitmix64(sm)
            state.append(word)
        self._s = state
        self._gauss_spare: float | None = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        return lo + (hi - lo) * u

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        # Box-Muller; the spare keeps consecutive calls cheap and the
        # stream consumption even.
        if self._gauss_spare is not None:
            z = self._gauss_spare
            self._gauss_spare = None
            return mu + sigma * z
        while True:
            u1 = self.uniform()
            if u1 > 0.0:
                break
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._gauss_spare = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * r * math.cos(2.0 * math.pi * u2)

    def randint(self, n: int) -> int:
        """Integer in [0, n) by rejection, unbiased."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (_MASK + 1) - ((_MASK + 1) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices out of range(n), in draw order."""
        if k > n:
            raise ValueError("cannot sample more indices than available")
        pool = list(range(n))
        out = []
        for _ in range(k):
            j = self.randint(len(pool))
            out.append(pool.pop(j))
        return out
