"""Deterministic 64-bit randomness for reproducible searches.

SplitMix64 is the only generator used in this package: it is tiny, fast and
platform independent, so a walk driven by a given seed replays the same flip
sequence everywhere, including inside the compiled walk engine, which carries
an identical copy of the update rule.  Child seeds for derived streams (one
per walk, per pool attempt, per rank level) come from derive_seed, which
absorbs integer labels into the mixing function one round at a time.
"""

from __future__ import annotations

__all__ = ["MASK64", "SplitMix64", "derive_seed", "mix64"]

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """One SplitMix64 finalizer round; a strong 64-bit bijection."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


class SplitMix64:
    """The SplitMix64 sequence: state steps by the golden-ratio constant."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next(self) -> int:
        """Next raw 64-bit output."""
        self.state = (self.state + _GOLDEN) & MASK64
        return mix64(self.state)

    def below(self, n: int) -> int:
        """Uniform draw from range(n) by masked rejection; n must be positive.

        Always consumes at least one output, so two consumers that agree on
        the sequence of bounds stay in lockstep.
        """
        if n <= 0:
            raise ValueError("below needs a positive bound")
        mask = 1
        while mask < n:
            mask <<= 1
        mask -= 1
        while True:
            v = self.next() & mask
            if v < n:
                return v


def derive_seed(master: int, *labels: int) -> int:
    """Stable child seed from a master seed and integer labels."""
    x = mix64(master)
    for label in labels:
        x = mix64((x + _GOLDEN) ^ (label & MASK64))
    return x
