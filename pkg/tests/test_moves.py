"""Flips, reductions and splits: frozen examples and random-move laws."""

from __future__ import annotations

import random

import pytest

from flipgraph.gf2 import BitMatrix
from flipgraph.moves import (
    DegenerateFlipError,
    FlipMove,
    ReductionCertificate,
    apply_flip,
    apply_reduction,
    enumerate_flips,
    enumerate_reductions,
    find_reduction,
    split,
)
from flipgraph.scheme import (
    Format,
    Scheme,
    Triple,
    fixture,
    scheme_tensor,
    standard_scheme,
)
from helpers import walked_standard


def oracle_flip_count(s: Scheme) -> int:
    """Definitional count: 2 orders x 2 choices per pair sharing one role.

    A pair admits flips in a role exactly when it agrees there and differs
    in both remaining roles (else an outcome would have a zero factor).
    """
    raws = s.raw()
    count = 0
    for x in range(len(raws)):
        for y in range(x + 1, len(raws)):
            for role in range(3):
                if raws[x][role] != raws[y][role]:
                    continue
                others = [r for r in range(3) if r != role]
                if all(raws[x][r] != raws[y][r] for r in others):
                    count += 4
    return count


def tensor_of(s: Scheme) -> int:
    return scheme_tensor(s.format, s.raw())


# ---------------------------------------------------------------------------
# Flips.


def test_flip_free_fixtures():
    for name in ("strassen_222", "isolated_222_rank8"):
        s = fixture(name)
        assert enumerate_flips(s) == []
        assert oracle_flip_count(s) == 0


def test_standard_flip_count_and_order():
    s = standard_scheme(Format(2, 2, 2))
    moves = enumerate_flips(s)
    assert len(moves) == oracle_flip_count(s) == 48
    assert moves == sorted(moves, key=lambda m: m.sort_key)
    assert all(m.i != m.j for m in moves)


def test_flip_example_combining_b_factors():
    # Elements E11(x)E11(x)E11 and E11(x)E12(x)E21 of the standard scheme;
    # the choice that adds the b-factors onto the first element.
    s = standard_scheme(Format(2, 2, 2))
    assert s.raw()[0] == (1, 1, 1) and s.raw()[1] == (1, 2, 4)
    out = apply_flip(s, FlipMove(0, 1, 0, "second"))
    assert out.rank == 8 and out.verify()
    assert (1, 3, 1) in out.raw() and (1, 2, 5) in out.raw()
    mirrored = apply_flip(s, FlipMove(1, 0, 0, "first"))
    assert mirrored == out


def test_flip_preserves_sum_rank_and_is_reversible():
    rng = random.Random(7)
    fmts = [Format(2, 2, 2), Format(2, 2, 3), Format(3, 3, 3)]
    checked = 0
    for fmt in fmts:
        s = standard_scheme(fmt)
        target = tensor_of(s)
        for _ in range(40):
            moves = enumerate_flips(s)
            m = rng.choice(moves)
            after = apply_flip(s, m)
            assert after.rank == s.rank
            assert tensor_of(after) == target
            # The same (role, choice) on the images, in image order, undoes it.
            back = apply_flip(
                after,
                FlipMove(
                    after.raw().index(_image(s, m)[0]),
                    after.raw().index(_image(s, m)[1]),
                    m.shared_role,
                    m.t_choice,
                ),
            )
            assert back == s
            s = after
            checked += 1
    assert checked == 120


def _image(s: Scheme, m: FlipMove) -> tuple[tuple, tuple]:
    from flipgraph.moves import _flip_raws

    return _flip_raws(s.raw()[m.i], s.raw()[m.j], m.shared_role, m.t_choice)


def test_flip_move_validation():
    s = standard_scheme(Format(2, 2, 2))
    with pytest.raises(ValueError):
        FlipMove(0, 0, 0, "first")
    with pytest.raises(ValueError):
        FlipMove(0, 1, 3, "first")
    with pytest.raises(ValueError):
        FlipMove(0, 1, 0, "both")
    with pytest.raises(ValueError):
        apply_flip(s, FlipMove(0, 9, 0, "first"))
    with pytest.raises(ValueError):
        apply_flip(s, FlipMove(0, 2, 0, "first"))  # no shared a factor


def test_degenerate_flip_signaled():
    fmt = Format(2, 2, 2)
    s = Scheme.from_raw(fmt, [(1, 1, 1), (1, 1, 2), (2, 4, 1), (2, 8, 4)])
    with pytest.raises(DegenerateFlipError):
        apply_flip(s, FlipMove(0, 1, 0, "first"))
    assert all(
        not (m.i, m.j) == (0, 1) or m.shared_role == 2
        for m in enumerate_flips(s)
    )


# ---------------------------------------------------------------------------
# Reductions.


def absorbing_triples() -> Scheme:
    # Three elements sharing their first factor whose middle factors are
    # dependent: the third absorbs the other two.
    fmt = Format(2, 1, 3)
    a11 = BitMatrix.from_text("1,0")
    b11, b12 = BitMatrix.from_text("100"), BitMatrix.from_text("010")
    c11, c31, c22 = (
        BitMatrix.from_text("10,00,00"),
        BitMatrix.from_text("00,00,10"),
        BitMatrix.from_text("00,01,00"),
    )
    return Scheme.from_triples(
        fmt,
        [
            Triple(a11, b11, c11),
            Triple(a11, b12, c31),
            Triple(a11, b11 ^ b12, c22),
        ],
    )


def test_find_reduction_absorbing_example():
    s = absorbing_triples()
    cert = find_reduction(s)
    assert cert == ReductionCertificate(
        role_one=0, role_dep=1, pivot=2, others=frozenset({0, 1})
    )
    assert cert.indices == frozenset({0, 1, 2})
    out = apply_reduction(s, cert)
    assert tensor_of(out) == tensor_of(s)
    assert out.raw() == (
        (1, 0b001, 0b001001),  # c11 + c22
        (1, 0b010, 0b011000),  # c31 + c22
    )


def test_find_reduction_accepts_triple_lists():
    s = absorbing_triples()
    assert find_reduction(list(s.elements)) == find_reduction(s)
    assert find_reduction(list(s.elements)[:2]) is None


def test_irreducible_fixtures():
    assert find_reduction(fixture("strassen_222")) is None
    assert find_reduction(fixture("isolated_222_rank8")) is None
    for fmt in (Format(2, 2, 2), Format(3, 3, 3), Format(2, 3, 4)):
        assert find_reduction(standard_scheme(fmt)) is None


def test_enumerate_reductions_absorbing_example():
    s = absorbing_triples()
    certs = enumerate_reductions(s)
    assert len(certs) == 3
    assert {(c.pivot, c.others) for c in certs} == {
        (0, frozenset({1, 2})),
        (1, frozenset({0, 2})),
        (2, frozenset({0, 1})),
    }
    assert all(c.role_one == 0 and c.role_dep == 1 for c in certs)
    for c in certs:
        out = apply_reduction(s, c)
        assert out.rank == 2 and tensor_of(out) == tensor_of(s)


def test_duplicate_pair_cancels_to_rank_minus_two():
    base = standard_scheme(Format(2, 2, 2))
    padded = Scheme.from_raw(base.format, base.raw() + ((3, 3, 3), (3, 3, 3)))
    assert padded.rank == 10 and padded.verify()
    cert = find_reduction(padded)
    assert cert is not None and len(cert.indices) == 2
    out = apply_reduction(padded, cert)
    assert out == base


def test_apply_reduction_rejects_bad_certificates():
    s = absorbing_triples()
    with pytest.raises(ValueError):
        ReductionCertificate(0, 0, 2, frozenset({0}))
    with pytest.raises(ValueError):
        ReductionCertificate(0, 1, 2, frozenset())
    with pytest.raises(ValueError):
        ReductionCertificate(0, 1, 2, frozenset({2}))
    with pytest.raises(ValueError):
        apply_reduction(s, ReductionCertificate(0, 1, 2, frozenset({9})))
    with pytest.raises(ValueError):
        apply_reduction(s, ReductionCertificate(0, 1, 2, frozenset({0})))
    with pytest.raises(ValueError):
        apply_reduction(s, ReductionCertificate(0, 2, 2, frozenset({0, 1})))


# ---------------------------------------------------------------------------
# Splits.


def test_split_and_recombine():
    s = standard_scheme(Format(2, 2, 2))
    out = split(s, 0, 2, BitMatrix.from_text("00,01"))
    assert out.rank == 9 and out.verify()
    assert (1, 1, 9) in out.raw() and (1, 1, 8) in out.raw()
    cert = find_reduction(out)
    assert cert is not None
    assert apply_reduction(out, cert) == s


def test_split_rejections():
    s = standard_scheme(Format(2, 2, 2))
    zero = BitMatrix.from_text("00,00")
    with pytest.raises(ValueError):
        split(s, 0, 2, zero)
    with pytest.raises(ValueError):
        split(s, 0, 2, BitMatrix.from_text("10,00"))  # equals current factor
    with pytest.raises(ValueError):
        split(s, 0, 2, BitMatrix.from_text("100,000"))  # wrong shape
    with pytest.raises(ValueError):
        split(s, 99, 2, BitMatrix.from_text("00,01"))
    with pytest.raises(ValueError):
        split(s, 0, 5, BitMatrix.from_text("00,01"))
    once = split(s, 0, 2, BitMatrix.from_text("00,01"))
    again_idx = once.raw().index((1, 1, 9))
    with pytest.raises(ValueError):
        split(once, again_idx, 2, BitMatrix.from_text("00,01"))


def test_split_then_reduce_round_trip_random():
    rng = random.Random(11)
    fmt = Format(2, 2, 3)
    for _ in range(30):
        s = walked_standard(rng, fmt, rng.randrange(12))
        idx = rng.randrange(s.rank)
        role = rng.randrange(3)
        old = s.elements[idx].factor(role)
        bits = rng.randrange(1, 1 << (old.rows * old.cols))
        if bits == old.bits:
            continue
        new = BitMatrix(old.rows, old.cols, bits)
        try:
            grown = split(s, idx, role, new)
        except ValueError:
            continue
        assert grown.rank == s.rank + 1
        assert tensor_of(grown) == tensor_of(s)
        assert enumerate_reductions(grown)


# ---------------------------------------------------------------------------
# Random-move law checks across formats.


def test_oracle_flip_count_on_walked_schemes():
    rng = random.Random(3)
    for fmt in (Format(2, 2, 2), Format(2, 3, 2), Format(3, 3, 3)):
        for _ in range(10):
            s = walked_standard(rng, fmt, rng.randrange(20))
            assert len(enumerate_flips(s)) == oracle_flip_count(s)


def test_reductions_on_grown_schemes_decrease_rank():
    rng = random.Random(5)
    fmt = Format(2, 2, 2)
    checked = 0
    for _ in range(40):
        s = walked_standard(rng, fmt, rng.randrange(15))
        idx = rng.randrange(s.rank)
        role = rng.randrange(3)
        old = s.elements[idx].factor(role)
        bits = rng.randrange(1, 16)
        if bits == old.bits:
            continue
        try:
            grown = split(s, idx, role, BitMatrix(old.rows, old.cols, bits))
        except ValueError:
            continue
        cert = find_reduction(grown)
        assert cert is not None
        out = apply_reduction(grown, cert)
        assert out.rank <= grown.rank - 1
        assert tensor_of(out) == tensor_of(grown)
        assert out.verify()
        checked += 1
    assert checked >= 30
