"""Symmetries of multiplication schemes and orbit canonicalization.

The symmetry group is generated by sandwiching the factors with invertible
matrices, cyclically rotating the three roles, and transposing.  A
SymmetryElement applies its sandwich first (sized to the scheme's own
format), then the cyclic shift, then the transpose; the composite of any two
such maps is again of this shape, so enumerating all field values walks the
whole group.

Orbit identity is exact where the group is small enough to enumerate
(canonical_form, orbit_raw_forms); beyond the budget, hash_invariant and
pair_profile give orbit-invariant fingerprints and ``equivalent`` decides
exactly via a table-driven multiset search over the sandwich components.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Iterator, Optional, Sequence

import numpy as np

from .gf2 import BitMatrix
from .scheme import Format, Raw, Scheme

__all__ = [
    "DEFAULT_ORBIT_BUDGET",
    "OrbitBudgetError",
    "SymmetryElement",
    "apply_symmetry",
    "canonical_form",
    "canonical_raw",
    "equivalent",
    "gl_group",
    "hash_invariant",
    "orbit_group_order",
    "orbit_raw_forms",
    "pair_profile",
    "random_symmetry",
]

DEFAULT_ORBIT_BUDGET = 100_000


class OrbitBudgetError(RuntimeError):
    """Enumerating the orbit would exceed the budget; use hash_invariant."""


# ---------------------------------------------------------------------------
# Packed-matrix helpers and GL(k, 2) tables.


def _mul_bits(rk: int, mid: int, cl: int, x: int, y: int) -> int:
    """Packed product of an rk x mid matrix by a mid x cl matrix."""
    out = 0
    mask = (1 << cl) - 1
    for r in range(rk):
        xrow = x >> (r * mid)
        row = 0
        for j in range(mid):
            if (xrow >> j) & 1:
                row ^= (y >> (j * cl)) & mask
        out |= row << (r * cl)
    return out


def _transpose_bits(rows: int, cols: int, bits: int) -> int:
    out = 0
    for r in range(rows):
        for c in range(cols):
            if (bits >> (r * cols + c)) & 1:
                out |= 1 << (c * rows + r)
    return out


@lru_cache(maxsize=None)
def _transpose_list(rows: int, cols: int) -> list[int]:
    return [_transpose_bits(rows, cols, b) for b in range(1 << (rows * cols))]


def _transposed(rows: int, cols: int, bits: int) -> int:
    if rows * cols <= 12:
        return _transpose_list(rows, cols)[bits]
    return _transpose_bits(rows, cols, bits)


@lru_cache(maxsize=None)
def _rank_list(rows: int, cols: int) -> list[int]:
    return [BitMatrix(rows, cols, b).rank() for b in range(1 << (rows * cols))]


def _factor_rank(rows: int, cols: int, bits: int) -> int:
    if rows * cols <= 12:
        return _rank_list(rows, cols)[bits]
    return BitMatrix(rows, cols, bits).rank()


@lru_cache(maxsize=None)
def gl_group(k: int) -> tuple[int, ...]:
    """All invertible k x k matrices over GF(2), packed, ascending."""
    if k > 4:
        raise OrbitBudgetError(f"GL({k}, 2) enumeration is not supported")
    return tuple(
        b for b in range(1 << (k * k)) if BitMatrix(k, k, b).rank() == k
    )


@lru_cache(maxsize=None)
def _gl_index(k: int) -> dict[int, int]:
    return {b: i for i, b in enumerate(gl_group(k))}


@lru_cache(maxsize=None)
def _gl_inverse_idx(k: int) -> tuple[int, ...]:
    idx = _gl_index(k)
    return tuple(idx[BitMatrix(k, k, b).inverse().bits] for b in gl_group(k))


@lru_cache(maxsize=None)
def _left_table(k: int, l: int) -> np.ndarray:
    """[x, a] -> packed X_x A for X in GL(k) and A any k x l matrix."""
    if k > 3 or k * l > 12:
        raise OrbitBudgetError(f"no multiplication table for {k}x{l} factors")
    g = gl_group(k)
    tbl = np.zeros((len(g), 1 << (k * l)), dtype=np.int32)
    for i, x in enumerate(g):
        row = tbl[i]
        for a in range(1 << (k * l)):
            row[a] = _mul_bits(k, k, l, x, a)
    return tbl


@lru_cache(maxsize=None)
def _right_table(k: int, l: int) -> np.ndarray:
    """[y, a] -> packed A Y_y for Y in GL(l) and A any k x l matrix."""
    if l > 3 or k * l > 12:
        raise OrbitBudgetError(f"no multiplication table for {k}x{l} factors")
    g = gl_group(l)
    tbl = np.zeros((len(g), 1 << (k * l)), dtype=np.int32)
    for i, y in enumerate(g):
        row = tbl[i]
        for a in range(1 << (k * l)):
            row[a] = _mul_bits(k, l, l, a, y)
    return tbl


@lru_cache(maxsize=None)
def _left_list(k: int, l: int) -> list[list[int]]:
    return _left_table(k, l).tolist()


@lru_cache(maxsize=None)
def _right_list(k: int, l: int) -> list[list[int]]:
    return _right_table(k, l).tolist()


# ---------------------------------------------------------------------------
# Shape operations (cyclic shift, transpose).


def _shape_format(fmt: Format, shift: int, flag: int) -> Format:
    n, m, p = fmt.as_tuple()
    for _ in range(shift % 3):
        n, m, p = m, p, n
    if flag:
        n, m, p = p, m, n
    return Format(n, m, p)


def _shape_raw(fmt: Format, raw: Raw, shift: int, flag: int) -> Raw:
    dims = list(fmt.dims)
    a, b, g = raw
    for _ in range(shift % 3):
        a, b, g = b, g, a
        dims = [dims[1], dims[2], dims[0]]
    if flag:
        (ar, ac), (br, bc), (gr, gc) = dims
        a, b, g = (
            _transposed(br, bc, b),
            _transposed(ar, ac, a),
            _transposed(gr, gc, g),
        )
    return (a, b, g)


@lru_cache(maxsize=None)
def _format_shapes(fmt: Format) -> tuple[tuple[int, int], ...]:
    """The (shift, transpose) pairs mapping the format to itself."""
    return tuple(
        (sh, fl)
        for sh in (0, 1, 2)
        for fl in (0, 1)
        if _shape_format(fmt, sh, fl) == fmt
    )


# ---------------------------------------------------------------------------
# Symmetry elements.


@dataclass(frozen=True)
class SymmetryElement:
    """One symmetry: sandwich by (U, V, W), then shift, then transpose."""

    cyclic_shift: int
    transpose_flag: int
    sandwich: tuple[BitMatrix, BitMatrix, BitMatrix]

    def __post_init__(self) -> None:
        if self.cyclic_shift not in (0, 1, 2):
            raise ValueError(f"bad cyclic shift {self.cyclic_shift}")
        if self.transpose_flag not in (0, 1):
            raise ValueError(f"bad transpose flag {self.transpose_flag}")
        for mat in self.sandwich:
            if mat.rows != mat.cols or mat.rank() != mat.rows:
                raise ValueError("sandwich matrices must be square invertible")


def apply_symmetry(s: Scheme, g: SymmetryElement) -> Scheme:
    """Transform every element; the format rotates with the scheme."""
    fmt = s.format
    u, v, w = g.sandwich
    if (u.rows, v.rows, w.rows) != fmt.as_tuple():
        raise ValueError(
            f"sandwich sizes {(u.rows, v.rows, w.rows)} do not match {fmt}"
        )
    ui, vi, wi = u.inverse(), v.inverse(), w.inverse()
    raws = []
    for t in s.elements:
        raw = (
            (u @ t.a @ vi).bits,
            (v @ t.b @ wi).bits,
            (w @ t.g @ ui).bits,
        )
        raws.append(_shape_raw(fmt, raw, g.cyclic_shift, g.transpose_flag))
    return Scheme.from_raw(
        _shape_format(fmt, g.cyclic_shift, g.transpose_flag), raws
    )


def random_symmetry(fmt: Format, rng) -> SymmetryElement:
    """A symmetry element drawn uniformly from the full group for ``fmt``."""
    dims = fmt.as_tuple()
    sandwich = tuple(
        BitMatrix(k, k, rng.choice(gl_group(k))) for k in dims
    )
    return SymmetryElement(rng.randrange(3), rng.randrange(2), sandwich)


# ---------------------------------------------------------------------------
# Orbit enumeration and canonical forms.


def orbit_group_order(fmt: Format) -> int:
    """Number of images enumerated for an exact orbit of this format."""
    return len(_format_shapes(fmt)) * prod(
        len(gl_group(k)) for k in fmt.as_tuple()
    )


def _orbit_iter(s: Scheme, budget: int) -> Iterator[tuple[Raw, ...]]:
    fmt = s.format
    order = orbit_group_order(fmt)
    if order > budget:
        raise OrbitBudgetError(
            f"orbit of format {fmt} has {order} images, over the budget of "
            f"{budget}; use hash_invariant / equivalent instead"
        )
    n, m, p = fmt.as_tuple()
    ln, lm, lp = _left_list(n, m), _left_list(m, p), _left_list(p, n)
    rn, rm, rp = _right_list(n, m), _right_list(m, p), _right_list(p, n)
    inv_n, inv_m, inv_p = (
        _gl_inverse_idx(n),
        _gl_inverse_idx(m),
        _gl_inverse_idx(p),
    )
    for sh, fl in _format_shapes(fmt):
        shaped = [_shape_raw(fmt, raw, sh, fl) for raw in s.raw()]
        av = [t[0] for t in shaped]
        bv = [t[1] for t in shaped]
        gv = [t[2] for t in shaped]
        for iu in range(len(inv_n)):
            lau = ln[iu]
            rgu = rn[inv_n[iu]]
            a1 = [lau[a] for a in av]
            for iv in range(len(inv_m)):
                rav = rm[inv_m[iv]]
                lbv = lm[iv]
                a2 = [rav[a] for a in a1]
                b1 = [lbv[b] for b in bv]
                for iw in range(len(inv_p)):
                    rbw = rp[inv_p[iw]]
                    lgw = lp[iw]
                    yield tuple(
                        sorted(
                            (a2[e], rbw[b1[e]], rgu[lgw[gv[e]]])
                            for e in range(len(a2))
                        )
                    )


def orbit_raw_forms(
    s: Scheme, budget: int = DEFAULT_ORBIT_BUDGET
) -> set[tuple[Raw, ...]]:
    """Every sorted raw form in the orbit (format-preserving symmetries)."""
    return set(_orbit_iter(s, budget))


def canonical_raw(
    s: Scheme, budget: int = DEFAULT_ORBIT_BUDGET
) -> tuple[Raw, ...]:
    return min(_orbit_iter(s, budget))


def canonical_form(s: Scheme, budget: int = DEFAULT_ORBIT_BUDGET) -> Scheme:
    """The lexicographically least symmetry image; constant on orbits."""
    return Scheme.from_raw(s.format, canonical_raw(s, budget))


# ---------------------------------------------------------------------------
# Orbit-invariant fingerprints.


def hash_invariant(s: Scheme) -> tuple:
    """A fingerprint constant on orbits: rank data only.

    Combines the scheme rank, the multiset of per-element sorted factor-rank
    triples, and the multiset of equal-factor class sizes pooled over the
    three roles.
    """
    dims = s.format.dims
    rank_triples = []
    classes: list[dict[int, int]] = [{}, {}, {}]
    for t in s.elements:
        raw = t.raw
        rank_triples.append(
            tuple(
                sorted(
                    _factor_rank(dims[r][0], dims[r][1], raw[r])
                    for r in range(3)
                )
            )
        )
        for r in range(3):
            classes[r][raw[r]] = classes[r].get(raw[r], 0) + 1
    sizes = sorted(c for by_role in classes for c in by_role.values())
    return (s.rank, tuple(sorted(rank_triples)), tuple(sizes))


def pair_profile(s: Scheme) -> tuple:
    """A sharper orbit-invariant fingerprint from pairwise factor sums.

    For every unordered element pair, the ranks of the three factor xors,
    sorted within the triple and over the multiset.
    """
    dims = s.format.dims
    raws = s.raw()
    out = []
    for i in range(len(raws)):
        for j in range(i + 1, len(raws)):
            out.append(
                tuple(
                    sorted(
                        _factor_rank(
                            dims[r][0], dims[r][1], raws[i][r] ^ raws[j][r]
                        )
                        for r in range(3)
                    )
                )
            )
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# Exact equivalence.


@lru_cache(maxsize=1024)
def _sorted_targets(s: Scheme) -> tuple[np.ndarray, ...]:
    raws = s.raw()
    a = np.sort(np.array([r[0] for r in raws], dtype=np.int64))
    b = np.sort(np.array([r[1] for r in raws], dtype=np.int64))
    g = np.sort(np.array([r[2] for r in raws], dtype=np.int64))
    keys = np.sort(
        np.array(
            [(r[0] << 40) | (r[1] << 20) | r[2] for r in raws],
            dtype=np.int64,
        )
    )
    return a, b, g, keys


def _rank_multiset(rows: int, cols: int, values) -> tuple[int, ...]:
    return tuple(sorted(_factor_rank(rows, cols, int(v)) for v in values))


def _equivalent_search(s1: Scheme, s2: Scheme) -> bool:
    """Decide orbit equality by searching the sandwich group per shape op.

    Narrows (X, Y) by matching the first-factor multiset, then Z by the
    second, then verifies the full element multiset.
    """
    fmt = s1.format
    n, m, p = fmt.as_tuple()
    if max(n, m, p) > 3:
        raise OrbitBudgetError(
            f"exact equivalence unsupported for format {fmt}"
        )
    lnm, rnm = _left_table(n, m), _right_table(n, m)
    lmp, rmp = _left_table(m, p), _right_table(m, p)
    lpn, rpn = _left_table(p, n), _right_table(p, n)
    inv_m = _gl_inverse_idx(m)
    inv_n = _gl_inverse_idx(n)
    inv_p = _gl_inverse_idx(p)
    a2, b2, g2, keys2 = _sorted_targets(s2)
    t_a = _rank_multiset(n, m, a2)
    t_b = _rank_multiset(m, p, b2)
    t_g = _rank_multiset(p, n, g2)
    for sh, fl in _format_shapes(fmt):
        shaped = [_shape_raw(fmt, raw, sh, fl) for raw in s1.raw()]
        a = np.array([t[0] for t in shaped], dtype=np.intp)
        b = np.array([t[1] for t in shaped], dtype=np.intp)
        g = np.array([t[2] for t in shaped], dtype=np.intp)
        if (
            _rank_multiset(n, m, a) != t_a
            or _rank_multiset(m, p, b) != t_b
            or _rank_multiset(p, n, g) != t_g
        ):
            continue
        a_img = rnm[:, lnm[:, a]]  # [q, x, e] = X_x A_e Q_q
        a_img = np.sort(a_img, axis=2)
        hits = np.nonzero((a_img == a2).all(axis=2))
        for q, x in zip(hits[0].tolist(), hits[1].tolist()):
            y = inv_m[q]
            b1 = lmp[y, b]
            b_img = np.sort(rmp[:, b1], axis=1)  # [zq, e] = Y B_e Zq
            for zq in np.nonzero((b_img == b2).all(axis=1))[0].tolist():
                z = inv_p[zq]
                g_fin = rpn[inv_n[x], lpn[z, g]]
                if not np.array_equal(np.sort(g_fin), g2):
                    continue
                a_fin = rnm[q, lnm[x, a]].astype(np.int64)
                b_fin = rmp[zq, b1].astype(np.int64)
                keys = np.sort(
                    (a_fin << 40) | (b_fin << 20) | g_fin.astype(np.int64)
                )
                if np.array_equal(keys, keys2):
                    return True
    return False


def equivalent(
    s1: Scheme, s2: Scheme, budget: int = DEFAULT_ORBIT_BUDGET
) -> bool:
    """Exactly decide whether two schemes lie in the same orbit."""
    if s1.format != s2.format:
        return False
    if s1.rank != s2.rank:
        return False
    if s1.raw() == s2.raw():
        return True
    if hash_invariant(s1) != hash_invariant(s2):
        return False
    if pair_profile(s1) != pair_profile(s2):
        return False
    if orbit_group_order(s1.format) <= budget:
        return canonical_raw(s1, budget) == canonical_raw(s2, budget)
    return _equivalent_search(s1, s2)
