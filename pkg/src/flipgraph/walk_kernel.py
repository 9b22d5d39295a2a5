"""Compiled fixed-rank walk engine.

A random walk only changes rank when it exits, so one walk segment runs at a
constant rank and its whole state fits in a few integer arrays: packed factor
bits per element and role, equal-factor groups per role, and a small
open-addressing table mapping factor bits to the group holding them.  The
stepper keeps this index current across flips and re-checks only the groups a
flip touches, so the cost of a step scales with the sizes of those groups and
not with a full rescan of the scheme.

Reducibility bookkeeping rests on one fact: in an irreducible scheme every
equal-factor group has linearly independent companion factors, and a flip
rewrites exactly two factors.  A flip outcome is therefore reducible exactly
when one rewritten factor lands in the span of an intact independent set, a
test the engine answers from the group index in a handful of xors.

The stepper exits with one of four statuses: step budget exhausted, current
scheme reducible, some flip neighbor reducible, or no flips available.  The
caller reads the exit scheme back out of the arrays and performs the actual
rank-changing rewrite on the plain Python path, which keeps every returned
scheme on the same code route as the reference implementation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .scheme import Scheme

__all__ = [
    "EXHAUSTED",
    "CURRENT_REDUCIBLE",
    "NEIGHBOR_REDUCIBLE",
    "NO_FLIPS",
    "STATUS_NAMES",
    "KernelWalk",
    "rng_draws",
    "rng_draws_below",
]

EXHAUSTED = 0
CURRENT_REDUCIBLE = 1
NEIGHBOR_REDUCIBLE = 2
NO_FLIPS = 3

STATUS_NAMES = {
    EXHAUSTED: "exhausted",
    CURRENT_REDUCIBLE: "current_reducible",
    NEIGHBOR_REDUCIBLE: "neighbor_reducible",
    NO_FLIPS: "no_flips",
}

_EMPTY = np.uint8(0)
_USED = np.uint8(1)
_TOMB = np.uint8(2)

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_S30 = _U64(30)
_S27 = _U64(27)
_S31 = _U64(31)
_ONE = _U64(1)


@njit(cache=True, inline="always")
def _mix64(x):
    x = (x ^ (x >> _S30)) * _MIX1
    x = (x ^ (x >> _S27)) * _MIX2
    return x ^ (x >> _S31)


@njit(cache=True, inline="always")
def _rng_next(rng):
    rng[0] = rng[0] + _GOLDEN
    return _mix64(rng[0])


@njit(cache=True)
def _rng_below(rng, n):
    nn = _U64(n)
    mask = _ONE
    while mask < nn:
        mask = mask + mask
    mask = mask - _ONE
    while True:
        v = _rng_next(rng) & mask
        if v < nn:
            return np.int64(v)


@njit(cache=True, inline="always")
def _probe_start(key, hcap):
    return np.int64(_mix64(_U64(key)) & _U64(hcap - 1))


@njit(cache=True)
def _ht_find(hkey, hgid, hstate, role, key, hcap):
    i = _probe_start(key, hcap)
    while True:
        st = hstate[role, i]
        if st == _EMPTY:
            return np.int64(-1)
        if st == _USED and hkey[role, i] == key:
            return hgid[role, i]
        i += 1
        if i == hcap:
            i = 0


@njit(cache=True)
def _ht_insert(hkey, hgid, hstate, htombs, role, key, gid, hcap):
    # The caller guarantees the key is absent.
    i = _probe_start(key, hcap)
    while hstate[role, i] == _USED:
        i += 1
        if i == hcap:
            i = 0
    if hstate[role, i] == _TOMB:
        htombs[role] -= 1
    hkey[role, i] = key
    hgid[role, i] = gid
    hstate[role, i] = _USED


@njit(cache=True)
def _ht_delete(hkey, hgid, hstate, htombs, role, key, hcap):
    i = _probe_start(key, hcap)
    while True:
        st = hstate[role, i]
        if st == _EMPTY:
            return
        if st == _USED and hkey[role, i] == key:
            hstate[role, i] = _TOMB
            htombs[role] += 1
            return
        i += 1
        if i == hcap:
            i = 0


@njit(cache=True)
def _ht_rebuild(hkey, hgid, hstate, htombs, gbits, gsize, role, cap, hcap):
    for i in range(hcap):
        hstate[role, i] = _EMPTY
    htombs[role] = 0
    for g in range(cap):
        if gsize[role, g] > 0:
            key = gbits[role, g]
            i = _probe_start(key, hcap)
            while hstate[role, i] == _USED:
                i += 1
                if i == hcap:
                    i = 0
            hkey[role, i] = key
            hgid[role, i] = g
            hstate[role, i] = _USED


@njit(cache=True)
def _group_detach(
    fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
    hkey, hgid, hstate, htombs, nmoves, role, e, hcap,
):
    g = gid_of[role, e]
    sz = gsize[role, g]
    pos = 0
    while gmem[role, g, pos] != e:
        pos += 1
    for t in range(pos, sz - 1):
        gmem[role, g, t] = gmem[role, g, t + 1]
    gsize[role, g] = sz - 1
    nmoves[role] += 2 * (sz - 1) * (sz - 2) - 2 * sz * (sz - 1)
    if sz == 1:
        _ht_delete(hkey, hgid, hstate, htombs, role, gbits[role, g], hcap)
        gfree[role, gfreetop[role]] = g
        gfreetop[role] += 1


@njit(cache=True)
def _group_attach(
    fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
    hkey, hgid, hstate, htombs, nmoves, role, e, hcap,
):
    key = fb[role, e]
    g = _ht_find(hkey, hgid, hstate, role, key, hcap)
    if g < 0:
        gfreetop[role] -= 1
        g = gfree[role, gfreetop[role]]
        gbits[role, g] = key
        gsize[role, g] = 0
        _ht_insert(hkey, hgid, hstate, htombs, role, key, g, hcap)
    sz = gsize[role, g]
    pos = sz
    while pos > 0 and gmem[role, g, pos - 1] > e:
        gmem[role, g, pos] = gmem[role, g, pos - 1]
        pos -= 1
    gmem[role, g, pos] = e
    gsize[role, g] = sz + 1
    gid_of[role, e] = g
    nmoves[role] += 2 * (sz + 1) * sz - 2 * sz * (sz - 1)


@njit(cache=True)
def _init_groups(
    fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
    hkey, hgid, hstate, htombs, nmoves, r, cap, hcap,
):
    for role in range(3):
        nmoves[role] = 0
        htombs[role] = 0
        gfreetop[role] = cap
        for i in range(cap):
            gfree[role, i] = cap - 1 - i
            gsize[role, i] = 0
        for i in range(hcap):
            hstate[role, i] = _EMPTY
        for e in range(r):
            _group_attach(
                fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
                hkey, hgid, hstate, htombs, nmoves, role, e, hcap,
            )


@njit(cache=True, inline="always")
def _lex_less(fb, a, b):
    """Whether slot a's element precedes slot b's in raw-tuple order."""
    if fb[0, a] != fb[0, b]:
        return fb[0, a] < fb[0, b]
    if fb[1, a] != fb[1, b]:
        return fb[1, a] < fb[1, b]
    return fb[2, a] < fb[2, b]


@njit(cache=True)
def _reorder_ranks(fb, slot_at_rank, rank_of, r, x, y):
    """Restore the rank permutation after slots x and y changed value.

    Elements live in fixed slots while the scheme's canonical order sorts by
    raw tuple, so the two views are tied together by this permutation; moves
    are enumerated and reported in rank order to match the canonical scheme.
    """
    w = 0
    for t in range(r):
        s = slot_at_rank[t]
        if s != x and s != y:
            slot_at_rank[w] = s
            w += 1
    pos = 0
    while pos < w and _lex_less(fb, slot_at_rank[pos], x):
        pos += 1
    t = w
    while t > pos:
        slot_at_rank[t] = slot_at_rank[t - 1]
        t -= 1
    slot_at_rank[pos] = x
    w += 1
    pos = 0
    while pos < w and _lex_less(fb, slot_at_rank[pos], y):
        pos += 1
    t = w
    while t > pos:
        slot_at_rank[t] = slot_at_rank[t - 1]
        t -= 1
    slot_at_rank[pos] = y
    for t in range(r):
        rank_of[slot_at_rank[t]] = t


@njit(cache=True)
def _in_span(piv, scr, count, x):
    """Whether x lies in the GF(2) span of scr[0:count]; piv is workspace."""
    nb = 0
    for idx in range(count):
        v = scr[idx]
        for t in range(nb):
            if (v ^ piv[t]) < v:
                v ^= piv[t]
        if v != 0:
            pos = nb
            while pos > 0 and piv[pos - 1] < v:
                piv[pos] = piv[pos - 1]
                pos -= 1
            piv[pos] = v
            nb += 1
    for t in range(nb):
        if (x ^ piv[t]) < x:
            x ^= piv[t]
    return x == 0


@njit(cache=True)
def _outcome_reducible(
    fb, gid_of, gsize, gmem, hkey, hgid, hstate, piv, scr,
    x, y, srole, hcap,
):
    """Whether the flip rewriting x's w-factor and y's u-factor reduces.

    The outcome replaces fb[w, x] by fb[w, x] ^ fb[w, y] and fb[u, y] by
    fb[u, y] ^ fb[u, x], where u < w are the roles other than srole.  Starting
    from an irreducible scheme, only five group checks can turn positive.
    """
    if srole == 0:
        u, w = 1, 2
    elif srole == 1:
        u, w = 0, 2
    else:
        u, w = 0, 1
    xs = fb[srole, x]
    xu = fb[u, x]
    xw = fb[w, x]
    yu = fb[u, y]
    yw = fb[w, y]
    unew = xu ^ yu
    wnew = xw ^ yw

    # Shared-role group: y's u-factor and x's w-factor change in place.
    g = gid_of[srole, x]
    sz = gsize[srole, g]
    if sz >= 3:
        cnt = 0
        for t in range(sz):
            m = gmem[srole, g, t]
            if m != y:
                scr[cnt] = fb[u, m]
                cnt += 1
        if _in_span(piv, scr, cnt, unew):
            return True
        cnt = 0
        for t in range(sz):
            m = gmem[srole, g, t]
            if m != x:
                scr[cnt] = fb[w, m]
                cnt += 1
        if _in_span(piv, scr, cnt, wnew):
            return True

    # y joins the u-group holding unew, if any.
    g2 = _ht_find(hkey, hgid, hstate, u, unew, hcap)
    if g2 >= 0:
        sz2 = gsize[u, g2]
        for t in range(sz2):
            scr[t] = fb[srole, gmem[u, g2, t]]
        if _in_span(piv, scr, sz2, xs):
            return True
        for t in range(sz2):
            scr[t] = fb[w, gmem[u, g2, t]]
        if _in_span(piv, scr, sz2, yw):
            return True

    # x's u-group sees x's w-factor change.
    g3 = gid_of[u, x]
    sz3 = gsize[u, g3]
    if sz3 >= 2:
        cnt = 0
        for t in range(sz3):
            m = gmem[u, g3, t]
            if m != x:
                scr[cnt] = fb[w, m]
                cnt += 1
        if _in_span(piv, scr, cnt, wnew):
            return True

    # x joins the w-group holding wnew, if any.
    g4 = _ht_find(hkey, hgid, hstate, w, wnew, hcap)
    if g4 >= 0:
        sz4 = gsize[w, g4]
        for t in range(sz4):
            scr[t] = fb[srole, gmem[w, g4, t]]
        if _in_span(piv, scr, sz4, xs):
            return True
        for t in range(sz4):
            scr[t] = fb[u, gmem[w, g4, t]]
        if _in_span(piv, scr, sz4, xu):
            return True

    # y's w-group sees y's u-factor change.
    g5 = gid_of[w, y]
    sz5 = gsize[w, g5]
    if sz5 >= 2:
        cnt = 0
        for t in range(sz5):
            m = gmem[w, g5, t]
            if m != y:
                scr[cnt] = fb[u, m]
                cnt += 1
        if _in_span(piv, scr, cnt, unew):
            return True

    return False


@njit(cache=True)
def _scan_neighbors(
    fb, gid_of, gsize, gmem, hkey, hgid, hstate, piv, scr,
    slot_at_rank, rank_of, r, hcap, mv,
):
    """First reducible flip outcome in (role, i, j, choice) rank order.

    Checking pairs with rank(i) < rank(j) covers every outcome at its
    earliest position in the move order, because the reversed pair with the
    opposite choice produces the same scheme.  mv receives the slot pair.
    """
    for role in range(3):
        for ri in range(r):
            i = slot_at_rank[ri]
            g = gid_of[role, i]
            sz = gsize[role, g]
            if sz < 2:
                continue
            last = ri
            while True:
                j = -1
                jrank = r
                for t in range(sz):
                    m = gmem[role, g, t]
                    rm = rank_of[m]
                    if rm > last and rm < jrank:
                        jrank = rm
                        j = m
                if j < 0:
                    break
                last = jrank
                if _outcome_reducible(
                    fb, gid_of, gsize, gmem, hkey, hgid, hstate,
                    piv, scr, i, j, role, hcap,
                ):
                    mv[0] = i
                    mv[1] = j
                    mv[2] = role
                    mv[3] = 0
                    return True
                if _outcome_reducible(
                    fb, gid_of, gsize, gmem, hkey, hgid, hstate,
                    piv, scr, j, i, role, hcap,
                ):
                    mv[0] = i
                    mv[1] = j
                    mv[2] = role
                    mv[3] = 1
                    return True
    return False


@njit(cache=True)
def _locate_move(gid_of, gsize, gmem, nmoves, slot_at_rank, rank_of, r, k, mv):
    """The k-th move in (role, i, j, choice) rank order, as slots in mv."""
    role = 0
    while k >= nmoves[role]:
        k -= nmoves[role]
        role += 1
    for ri in range(r):
        i = slot_at_rank[ri]
        g = gid_of[role, i]
        sz = gsize[role, g]
        if sz < 2:
            continue
        c = 2 * (sz - 1)
        if k < c:
            jord = k >> 1
            last = -1
            j = -1
            for _ in range(jord + 1):
                j = -1
                jrank = r
                for t in range(sz):
                    m = gmem[role, g, t]
                    if m == i:
                        continue
                    rm = rank_of[m]
                    if rm > last and rm < jrank:
                        jrank = rm
                        j = m
                last = jrank
            mv[0] = i
            mv[1] = j
            mv[2] = role
            mv[3] = k & 1
            return
        k -= c


@njit(cache=True)
def _apply_move(
    fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
    hkey, hgid, hstate, htombs, nmoves, slot_at_rank, rank_of,
    x, y, srole, r, hcap,
):
    if srole == 0:
        u, w = 1, 2
    elif srole == 1:
        u, w = 0, 2
    else:
        u, w = 0, 1
    wnew = fb[w, x] ^ fb[w, y]
    unew = fb[u, y] ^ fb[u, x]
    _group_detach(
        fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
        hkey, hgid, hstate, htombs, nmoves, w, x, hcap,
    )
    fb[w, x] = wnew
    _group_attach(
        fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
        hkey, hgid, hstate, htombs, nmoves, w, x, hcap,
    )
    _group_detach(
        fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
        hkey, hgid, hstate, htombs, nmoves, u, y, hcap,
    )
    fb[u, y] = unew
    _group_attach(
        fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
        hkey, hgid, hstate, htombs, nmoves, u, y, hcap,
    )
    _reorder_ranks(fb, slot_at_rank, rank_of, r, x, y)


@njit(cache=True, nogil=True)
def _run(
    fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
    hkey, hgid, hstate, htombs, nmoves, slot_at_rank, rank_of,
    rng, flags, piv, scr, mv, r, cap, hcap, limit, check_neighbors, out,
):
    """Up to ``limit`` walk iterations; exit report written into out.

    out[0] holds the status, out[1:5] a reducible neighbor's move as
    (i, j, role, choice) in canonical element order, and out[5] the number
    of flips applied.  An iteration mirrors the reference loop: report a
    reducible current scheme, report a reducible neighbor when asked,
    otherwise take a uniform flip.  flags[0] persists the pending
    reducibility of the current scheme so a later call can resume.
    """
    for it in range(limit):
        if flags[0] != 0:
            out[0] = CURRENT_REDUCIBLE
            out[5] = it
            return
        total = nmoves[0] + nmoves[1] + nmoves[2]
        if total == 0:
            out[0] = NO_FLIPS
            out[5] = it
            return
        if check_neighbors:
            if _scan_neighbors(
                fb, gid_of, gsize, gmem, hkey, hgid, hstate,
                piv, scr, slot_at_rank, rank_of, r, hcap, mv,
            ):
                out[0] = NEIGHBOR_REDUCIBLE
                out[1] = rank_of[mv[0]]
                out[2] = rank_of[mv[1]]
                out[3] = mv[2]
                out[4] = mv[3]
                out[5] = it
                return
        k = _rng_below(rng, total)
        _locate_move(
            gid_of, gsize, gmem, nmoves, slot_at_rank, rank_of, r, k, mv,
        )
        if mv[3] == 0:
            x = mv[0]
            y = mv[1]
        else:
            x = mv[1]
            y = mv[0]
        role = mv[2]
        if check_neighbors:
            red = False  # the scan above cleared every neighbor
        else:
            red = _outcome_reducible(
                fb, gid_of, gsize, gmem, hkey, hgid, hstate,
                piv, scr, x, y, role, hcap,
            )
        _apply_move(
            fb, gid_of, gbits, gsize, gmem, gfree, gfreetop,
            hkey, hgid, hstate, htombs, nmoves, slot_at_rank, rank_of,
            x, y, role, r, hcap,
        )
        if red:
            flags[0] = 1
        for rr in range(3):
            if htombs[rr] * 4 > hcap:
                _ht_rebuild(
                    hkey, hgid, hstate, htombs, gbits, gsize, rr, cap, hcap,
                )
    out[0] = EXHAUSTED
    out[5] = limit


@njit(cache=True)
def _rng_fill(rng, out):
    for i in range(out.shape[0]):
        out[i] = _rng_next(rng)


@njit(cache=True)
def _rng_fill_below(rng, bound, out):
    for i in range(out.shape[0]):
        out[i] = _rng_below(rng, bound)


def rng_draws(seed: int, count: int) -> np.ndarray:
    """Raw generator outputs as seen by the compiled stepper."""
    rng = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    out = np.empty(count, dtype=np.uint64)
    _rng_fill(rng, out)
    return out


def rng_draws_below(seed: int, count: int, bound: int) -> np.ndarray:
    """Bounded draws as seen by the compiled stepper."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    rng = np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    out = np.empty(count, dtype=np.int64)
    _rng_fill_below(rng, bound, out)
    return out


_CHOICE_NAMES = ("first", "second")


class KernelWalk:
    """One walk segment at fixed rank, backed by the compiled stepper.

    The constructor indexes the scheme; ``run`` advances the walk and reports
    how it stopped; ``scheme`` reads the current position back.  The caller
    is responsible for starting from an irreducible scheme, which is what
    makes the engine's group bookkeeping exact.
    """

    def __init__(self, scheme: Scheme) -> None:
        raws = scheme.raw()
        r = len(raws)
        if r == 0:
            raise ValueError("cannot walk an empty scheme")
        cap = r
        hcap = 64
        while hcap < 8 * cap:
            hcap <<= 1
        self.format = scheme.format
        self.rank = r
        self._cap = cap
        self._hcap = hcap
        self._fb = np.zeros((3, cap), dtype=np.int64)
        for e, (a, b, g) in enumerate(raws):
            self._fb[0, e] = a
            self._fb[1, e] = b
            self._fb[2, e] = g
        self._gid_of = np.zeros((3, cap), dtype=np.int64)
        self._gbits = np.zeros((3, cap), dtype=np.int64)
        self._gsize = np.zeros((3, cap), dtype=np.int64)
        self._gmem = np.zeros((3, cap, cap), dtype=np.int64)
        self._gfree = np.zeros((3, cap), dtype=np.int64)
        self._gfreetop = np.zeros(3, dtype=np.int64)
        self._hkey = np.zeros((3, hcap), dtype=np.int64)
        self._hgid = np.zeros((3, hcap), dtype=np.int64)
        self._hstate = np.zeros((3, hcap), dtype=np.uint8)
        self._htombs = np.zeros(3, dtype=np.int64)
        self._nmoves = np.zeros(3, dtype=np.int64)
        self._slot_at_rank = np.arange(cap, dtype=np.int64)
        self._rank_of = np.arange(cap, dtype=np.int64)
        self._flags = np.zeros(1, dtype=np.int64)
        self._piv = np.zeros(cap + 2, dtype=np.int64)
        self._scr = np.zeros(cap + 2, dtype=np.int64)
        self._mv = np.zeros(4, dtype=np.int64)
        self._out = np.zeros(6, dtype=np.int64)
        self.last_move: tuple[int, int, int, str] | None = None
        _init_groups(
            self._fb, self._gid_of, self._gbits, self._gsize, self._gmem,
            self._gfree, self._gfreetop, self._hkey, self._hgid, self._hstate,
            self._htombs, self._nmoves, r, cap, hcap,
        )

    def move_count(self) -> int:
        """Number of flips available, counting ordered pairs and choices."""
        return int(self._nmoves.sum())

    def run(
        self, rng_state: np.ndarray, limit: int, check_neighbors: bool
    ) -> tuple[int, int]:
        """Walk up to ``limit`` iterations; returns (status, flips applied)."""
        if limit < 0:
            raise ValueError("limit must be non-negative")
        _run(
            self._fb, self._gid_of, self._gbits, self._gsize, self._gmem,
            self._gfree, self._gfreetop, self._hkey, self._hgid, self._hstate,
            self._htombs, self._nmoves, self._slot_at_rank, self._rank_of,
            rng_state, self._flags, self._piv, self._scr, self._mv,
            self.rank, self._cap, self._hcap, limit, check_neighbors,
            self._out,
        )
        status = int(self._out[0])
        if status == NEIGHBOR_REDUCIBLE:
            self.last_move = (
                int(self._out[1]),
                int(self._out[2]),
                int(self._out[3]),
                _CHOICE_NAMES[int(self._out[4])],
            )
        else:
            self.last_move = None
        return status, int(self._out[5])

    def scheme(self) -> Scheme:
        """The current position, rebuilt as a Scheme."""
        raws = [
            (int(self._fb[0, e]), int(self._fb[1, e]), int(self._fb[2, e]))
            for e in range(self.rank)
        ]
        return Scheme.from_raw(self.format, raws)

    def move_at(self, k: int) -> tuple[int, int, int, str]:
        """The k-th move in (role, i, j, choice) canonical element order."""
        if not 0 <= k < self.move_count():
            raise ValueError("move index out of range")
        _locate_move(
            self._gid_of, self._gsize, self._gmem, self._nmoves,
            self._slot_at_rank, self._rank_of, self.rank, k, self._mv,
        )
        return (
            int(self._rank_of[self._mv[0]]),
            int(self._rank_of[self._mv[1]]),
            int(self._mv[2]),
            _CHOICE_NAMES[int(self._mv[3])],
        )

    def outcome_reducible(self, i: int, j: int, role: int, choice: str) -> bool:
        """Whether the flip at canonical indices (i, j) leaves a reducible scheme."""
        si = int(self._slot_at_rank[i])
        sj = int(self._slot_at_rank[j])
        x, y = (si, sj) if choice == "first" else (sj, si)
        return bool(
            _outcome_reducible(
                self._fb, self._gid_of, self._gsize, self._gmem,
                self._hkey, self._hgid, self._hstate, self._piv, self._scr,
                x, y, role, self._hcap,
            )
        )
