"""Deterministic 64-bit PRNG (splitmix64) and Fisher-Yates shuffling.

Dataset splits and training-epoch orderings must be reproducible across
machines and language runtimes, so shuffling is pinned to an explicitly
specified generator rather than the platform's default. splitmix64 is the
mixer from Steele, Lea & Flood (2014); the full algorithm fits in a dozen
lines and has no hidden state.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 generator over a 64-bit state.

    next_u64:  state += 0x9E3779B97F4A7C15, then finalize with the
    xor-shift/multiply mixer.  All arithmetic mod 2**64.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        bound = _MASK64 + 1 - ((_MASK64 + 1) % n)
        while True:
            u = self.next_u64()
            if u < bound:
                return u % n


def shuffled(items: list, seed: int) -> list:
    """Return a new list holding `items` in seeded Fisher-Yates order.

    Swaps run from the last index down to 1, drawing j in [0, i] each step,
    so the permutation is a pure function of (items order, seed).
    """
    rng = SplitMix64(seed)
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = rng.next_below(i + 1)
        out[i], out[j] = out[j], out[i]
    return out
