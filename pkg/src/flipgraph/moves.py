"""Edges of the flip graph: flips, reductions and splits.

A flip exchanges material between two elements that agree bit-exactly in one
factor role, keeping the rank and the element sum.  A reduction removes one
element whose factors are absorbed by the others, lowering the rank.  A split
is the inverse of the simplest reduction: one element becomes two.

Roles are numbered 0, 1, 2 for the three factor positions (named "a", "b",
"g" in text output).  For a flip with shared role s, write u < w for the two
remaining roles.  Choice "first" adds element j's w-factor onto element i and
element i's u-factor onto element j; choice "second" does the opposite.  The
two choices produce the two possible outcomes of the exchange, and
(i, j, first) yields the same scheme as (j, i, second).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import gf2
from .gf2 import BitMatrix
from .scheme import Scheme, Triple

__all__ = [
    "ROLE_NAMES",
    "ROLE_PAIRS",
    "FlipMove",
    "ReductionCertificate",
    "DegenerateFlipError",
    "enumerate_flips",
    "apply_flip",
    "find_reduction",
    "enumerate_reductions",
    "apply_reduction",
    "split",
]

ROLE_NAMES = ("a", "b", "g")

# Ordered role pairs scanned for reductions, in this fixed order.
ROLE_PAIRS = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))

CHOICES = ("first", "second")


class DegenerateFlipError(ValueError):
    """A flip outcome would contain a zero factor (a reduction in disguise)."""


@dataclass(frozen=True, slots=True)
class FlipMove:
    """One flip: elements i and j share the factor in shared_role."""

    i: int
    j: int
    shared_role: int
    t_choice: str

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise ValueError("flip needs two distinct elements")
        if self.shared_role not in (0, 1, 2):
            raise ValueError(f"bad role {self.shared_role}")
        if self.t_choice not in CHOICES:
            raise ValueError(f"bad choice {self.t_choice!r}")

    @property
    def sort_key(self) -> tuple[int, int, int, str]:
        return (self.shared_role, self.i, self.j, self.t_choice)


@dataclass(frozen=True, slots=True)
class ReductionCertificate:
    """Witness that the elements ``others | {pivot}`` absorb the pivot.

    All witnessed elements share the role_one factor bit-exactly, and the
    role_dep factors of ``others`` xor to the pivot's role_dep factor.
    """

    role_one: int
    role_dep: int
    pivot: int
    others: frozenset[int]

    def __post_init__(self) -> None:
        if self.role_one == self.role_dep:
            raise ValueError("role_one and role_dep must differ")
        if not self.others or self.pivot in self.others:
            raise ValueError("others must be nonempty and exclude the pivot")

    @property
    def indices(self) -> frozenset[int]:
        return self.others | {self.pivot}


def _other_roles(shared: int) -> tuple[int, int]:
    u, w = (r for r in range(3) if r != shared)
    return u, w


def _flip_raws(
    x: tuple[int, int, int], y: tuple[int, int, int], role: int, choice: str
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    u, w = _other_roles(role)
    nx, ny = list(x), list(y)
    if choice == "first":
        nx[w] ^= y[w]
        ny[u] ^= x[u]
    else:
        nx[u] ^= y[u]
        ny[w] ^= x[w]
    return tuple(nx), tuple(ny)


def enumerate_flips(s: Scheme) -> list[FlipMove]:
    """All non-degenerate flips, ordered by (shared_role, i, j, t_choice).

    Both orders of each element pair and both choices are listed, so each
    unordered outcome appears twice.  Pairs agreeing in a second role are
    skipped: their flips would produce a zero factor.
    """
    raws = s.raw()
    r = len(raws)
    moves = []
    for role in range(3):
        u, w = _other_roles(role)
        for i in range(r):
            for j in range(r):
                if i == j or raws[i][role] != raws[j][role]:
                    continue
                if raws[i][u] == raws[j][u] or raws[i][w] == raws[j][w]:
                    continue
                moves.append(FlipMove(i, j, role, "first"))
                moves.append(FlipMove(i, j, role, "second"))
    moves.sort(key=lambda m: m.sort_key)
    return moves


def apply_flip(s: Scheme, m: FlipMove) -> Scheme:
    """Apply one flip; raises DegenerateFlipError on a zero-factor outcome."""
    raws = s.raw()
    if not (0 <= m.i < len(raws) and 0 <= m.j < len(raws)):
        raise ValueError(f"element index out of range in {m}")
    x, y = raws[m.i], raws[m.j]
    if x[m.shared_role] != y[m.shared_role]:
        raise ValueError(f"elements do not share role {m.shared_role}")
    nx, ny = _flip_raws(x, y, m.shared_role, m.t_choice)
    if 0 in nx or 0 in ny:
        raise DegenerateFlipError(f"{m} produces a zero factor")
    out = list(raws)
    out[m.i], out[m.j] = nx, ny
    return Scheme.from_raw(s.format, out)


# ---------------------------------------------------------------------------
# Reductions.


def _triples_of(ts: "Scheme | Sequence[Triple]") -> tuple[Triple, ...]:
    if isinstance(ts, Scheme):
        return ts.elements
    return tuple(ts)


def _groups(
    triples: Sequence[Triple], role: int
) -> list[tuple[int, list[int]]]:
    """Indices grouped by bit-exact equality of the role factor.

    Groups appear in first-occurrence order; each is (factor bits, indices).
    """
    order: dict[int, list[int]] = {}
    for k, t in enumerate(triples):
        order.setdefault(t.factor(role).bits, []).append(k)
    return list(order.items())


def find_reduction(
    ts: "Scheme | Sequence[Triple]",
) -> Optional[ReductionCertificate]:
    """First reduction certificate in scan order, or None if irreducible.

    Scans the six ordered role pairs, within each the equal-factor groups in
    first-occurrence order, and reports a dependence among the second role's
    factors of the first group that has one.
    """
    triples = _triples_of(ts)
    for role_one, role_dep in ROLE_PAIRS:
        for _, idxs in _groups(triples, role_one):
            if len(idxs) < 2:
                continue
            dep = gf2.dependence([triples[k].factor(role_dep) for k in idxs])
            if dep is not None:
                return ReductionCertificate(
                    role_one=role_one,
                    role_dep=role_dep,
                    pivot=idxs[dep.t],
                    others=frozenset(idxs[k] for k in dep.others),
                )
    return None


def enumerate_reductions(
    ts: "Scheme | Sequence[Triple]",
) -> list[ReductionCertificate]:
    """Every reduction certificate, across all role pairs, pivots and subsets."""
    triples = _triples_of(ts)
    out = []
    for role_one, role_dep in ROLE_PAIRS:
        for _, idxs in _groups(triples, role_one):
            if len(idxs) < 2:
                continue
            vals = [triples[k].factor(role_dep).bits for k in idxs]
            for pos, t in enumerate(idxs):
                rest = [k for k in range(len(idxs)) if k != pos]
                for size in range(1, len(rest) + 1):
                    for combo in itertools.combinations(rest, size):
                        acc = 0
                        for k in combo:
                            acc ^= vals[k]
                        if acc == vals[pos]:
                            out.append(
                                ReductionCertificate(
                                    role_one=role_one,
                                    role_dep=role_dep,
                                    pivot=t,
                                    others=frozenset(idxs[k] for k in combo),
                                )
                            )
    return out


def _check_certificate(
    triples: Sequence[Triple], c: ReductionCertificate
) -> None:
    r = len(triples)
    if not all(0 <= k < r for k in c.indices):
        raise ValueError("certificate index out of range")
    shared = triples[c.pivot].factor(c.role_one).bits
    if any(triples[k].factor(c.role_one).bits != shared for k in c.others):
        raise ValueError("witnessed elements do not share the role_one factor")
    acc = 0
    for k in c.others:
        acc ^= triples[k].factor(c.role_dep).bits
    if acc != triples[c.pivot].factor(c.role_dep).bits:
        raise ValueError("dependence coefficients do not reproduce the pivot")


def apply_reduction(s: Scheme, c: ReductionCertificate) -> Scheme:
    """Remove the pivot, absorbing it into the other witnessed elements.

    Each element of ``others`` picks up the pivot's factor in the remaining
    third role; any element cancelled to a zero factor is dropped too, so the
    rank decreases by at least one.
    """
    triples = s.elements
    _check_certificate(triples, c)
    third = 3 - c.role_one - c.role_dep
    pivot_third = triples[c.pivot].factor(third).bits
    out = []
    for k, t in enumerate(triples):
        if k == c.pivot:
            continue
        if k in c.others:
            bits = t.factor(third).bits ^ pivot_third
            if bits == 0:
                continue
            mats = [t.a, t.b, t.g]
            old = mats[third]
            mats[third] = BitMatrix(old.rows, old.cols, bits)
            out.append(Triple(*mats))
        else:
            out.append(t)
    return Scheme.from_triples(s.format, out)


# ---------------------------------------------------------------------------
# Splits.


def split(s: Scheme, index: int, role: int, new_factor: BitMatrix) -> Scheme:
    """Replace one element by two whose role factors sum to the old one.

    The result has rank + 1 and reduces back to ``s``.  The new factor must
    be nonzero and differ from the current one, and neither produced triple
    may already be an element.
    """
    if not 0 <= index < s.rank:
        raise ValueError("element index out of range")
    if role not in (0, 1, 2):
        raise ValueError(f"bad role {role}")
    t = s.elements[index]
    old = t.factor(role)
    if new_factor.is_zero:
        raise ValueError("split factor must be nonzero")
    if (new_factor.rows, new_factor.cols) != (old.rows, old.cols):
        raise ValueError("split factor has the wrong shape")
    if new_factor == old:
        raise ValueError("split factor must differ from the current factor")
    halves = []
    for bits in (old.bits ^ new_factor.bits, new_factor.bits):
        mats = [t.a, t.b, t.g]
        mats[role] = BitMatrix(old.rows, old.cols, bits)
        halves.append(Triple(*mats))
    existing = set(s.raw())
    for h in halves:
        if h.raw in existing:
            raise ValueError("split would duplicate an existing element")
    out = list(s.elements)
    out[index : index + 1] = halves
    return Scheme.from_triples(s.format, out)
