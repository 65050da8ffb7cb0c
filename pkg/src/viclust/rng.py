"""Deterministic 64-bit pseudo-random generator for every stochastic step.

The generator is xoshiro256** (Blackman & Vigna) with its 256-bit state
expanded from a 64-bit key by SplitMix64, the seeding scheme the xoshiro
authors recommend. Both algorithms are fixed here in pure Python so that
every platform reproduces identical streams for identical seeds; nothing
in the package draws randomness from any other source.

K-means restart ``r`` of user seed ``s`` uses the stream keyed by the
``r``-th SplitMix64 output of ``s`` (see :func:`derive_stream_key`).
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state once; returns ``(new_state, output)``."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def derive_stream_key(seed: int, stream: int) -> int:
    """64-bit key for substream ``stream`` of ``seed``.

    Key i is the (i+1)-th SplitMix64 output of the seed, so distinct
    (seed, stream) pairs map to well-separated generator states.
    """
    if stream < 0:
        raise ValueError("stream index must be non-negative")
    state = seed & _MASK64
    key = 0
    for _ in range(stream + 1):
        state, key = splitmix64_next(state)
    return key


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** stream seeded via SplitMix64 from a 64-bit key."""

    __slots__ = ("_s",)

    def __init__(self, key: int) -> None:
        state = key & _MASK64
        s = []
        for _ in range(4):
            state, out = splitmix64_next(state)
            s.append(out)
        self._s = s

    @classmethod
    def from_state(cls, state: tuple[int, int, int, int]) -> "Xoshiro256StarStar":
        """Construct with an explicit 4-word state (known-answer tests)."""
        rng = cls(0)
        rng._s = [w & _MASK64 for w in state]
        return rng

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def sample_indices(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), by partial Fisher-Yates."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} distinct indices from {n}")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
