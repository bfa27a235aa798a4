"""Portable pseudo-random stream used wherever a shuffle must reproduce
bit-for-bit across implementations.

The generator is SplitMix64 (Steele, Lea & Flood 2014) with its published
constants::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)

all arithmetic modulo 2**64. Bounded integers use rejection sampling on the
top of the range so every value in ``[0, n)`` is equally likely.
"""

from __future__ import annotations

from typing import MutableSequence, TypeVar

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

T = TypeVar("T")


class SplitMix64:
    """SplitMix64 generator over a 64-bit state."""

    def __init__(self, seed: int) -> None:
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        # largest multiple of n that fits in 64 bits; draws above it are rejected
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def shuffle(self, items: MutableSequence[T]) -> None:
        """In-place Fisher-Yates shuffle (Durstenfeld, high index downward)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def derive_seed(seed: int, *stream: int) -> int:
    """Combine a base seed with stream indices (e.g. an epoch number) into a
    new 64-bit seed by feeding each index through one SplitMix64 step."""
    s = seed & _MASK64
    for k in stream:
        s = SplitMix64(s ^ (k & _MASK64)).next_u64()
    return s


def permutation(n: int, seed: int) -> list[int]:
    order = list(range(n))
    SplitMix64(seed).shuffle(order)
    return order
