"""Shared test utilities: small random-walk scheme generators and oracles."""

from __future__ import annotations

import random
from typing import Optional

from flipgraph.moves import (
    apply_flip,
    apply_reduction,
    enumerate_flips,
    find_reduction,
)
from flipgraph.rng import SplitMix64
from flipgraph.scheme import Format, Scheme, standard_scheme


def walked_scheme(rng: random.Random, start: Scheme, steps: int) -> Scheme:
    """A scheme reached from ``start`` by uniformly random flips."""
    s = start
    for _ in range(steps):
        moves = enumerate_flips(s)
        if not moves:
            break
        s = apply_flip(s, rng.choice(moves))
    return s


def walked_standard(rng: random.Random, fmt: Format, steps: int) -> Scheme:
    return walked_scheme(rng, standard_scheme(fmt), steps)


def flip_walked(fmt: Format, seed: int, steps: int) -> Scheme:
    """Flip-walk from the standard scheme driven by the package generator.

    Unlike :func:`walked_scheme` this is stable across Python releases, so
    tests can freeze the exact scheme a (seed, steps) pair lands on.
    """
    cur = standard_scheme(fmt)
    rng = SplitMix64(seed)
    for _ in range(steps):
        moves = enumerate_flips(cur)
        if not moves:
            break
        cur = apply_flip(cur, moves[rng.below(len(moves))])
    return cur


def reference_walk(
    s: Scheme, limit: int, seed: int, check_neighbors: bool = True
) -> tuple[Optional[Scheme], int, Scheme]:
    """Plain-python walk built from the move primitives, step by step.

    Returns (result, flips applied, last irreducible position).  The loop is
    the unoptimized counterpart of search.random_walk: reduce a reducible
    start at once, bail out of a flip-free start, then per iteration check
    the current scheme, check every flip neighbor in move order, and
    otherwise step to a uniformly random flip.
    """
    cert = find_reduction(s)
    if cert is not None:
        return apply_reduction(s, cert), 0, s
    if not enumerate_flips(s):
        return None, 0, s
    rng = SplitMix64(seed)
    cur = s
    for it in range(limit):
        cert = find_reduction(cur)
        if cert is not None:
            return apply_reduction(cur, cert), it, cur
        moves = enumerate_flips(cur)
        if not moves:
            return None, it, cur
        if check_neighbors:
            for m in moves:
                neighbor = apply_flip(cur, m)
                cert = find_reduction(neighbor)
                if cert is not None:
                    return apply_reduction(neighbor, cert), it, cur
        cur = apply_flip(cur, moves[rng.below(len(moves))])
    return None, limit, cur
