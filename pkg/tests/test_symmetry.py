"""Symmetry action, canonical forms, fingerprints and equivalence."""

from __future__ import annotations

import random

import pytest

from flipgraph.gf2 import BitMatrix
from flipgraph.moves import enumerate_flips
from flipgraph.scheme import Format, Scheme, fixture, standard_scheme
from flipgraph.symmetry import (
    OrbitBudgetError,
    SymmetryElement,
    _equivalent_search,
    apply_symmetry,
    canonical_form,
    equivalent,
    gl_group,
    hash_invariant,
    orbit_group_order,
    orbit_raw_forms,
    pair_profile,
    random_symmetry,
)
from helpers import walked_standard


def identity_element(fmt: Format) -> SymmetryElement:
    return SymmetryElement(
        0, 0, tuple(BitMatrix.identity(k) for k in fmt.as_tuple())
    )


def test_gl_group_orders():
    assert [len(gl_group(k)) for k in (1, 2, 3)] == [1, 6, 168]
    with pytest.raises(OrbitBudgetError):
        gl_group(5)


def test_orbit_group_orders():
    assert orbit_group_order(Format(2, 2, 2)) == 6 * 6**3 == 1296
    assert orbit_group_order(Format(3, 3, 3)) == 6 * 168**3
    assert orbit_group_order(Format(2, 2, 3)) == 2 * 6 * 6 * 168


def test_symmetry_element_validation():
    fmt = Format(2, 2, 2)
    eye = tuple(BitMatrix.identity(2) for _ in range(3))
    with pytest.raises(ValueError):
        SymmetryElement(3, 0, eye)
    with pytest.raises(ValueError):
        SymmetryElement(0, 2, eye)
    singular = (BitMatrix(2, 2, 0b0011),) + eye[1:]
    with pytest.raises(ValueError):
        SymmetryElement(0, 0, singular)
    with pytest.raises(ValueError):
        apply_symmetry(standard_scheme(Format(2, 2, 3)), identity_element(fmt))


def test_identity_and_involution():
    s = fixture("strassen_222")
    assert apply_symmetry(s, identity_element(s.format)) == s
    transpose = SymmetryElement(
        0, 1, tuple(BitMatrix.identity(2) for _ in range(3))
    )
    assert apply_symmetry(apply_symmetry(s, transpose), transpose) == s


def test_cyclic_shift_rotates_format():
    s = standard_scheme(Format(2, 2, 3))
    shifted = apply_symmetry(
        s,
        SymmetryElement(
            1, 0, tuple(BitMatrix.identity(k) for k in (2, 2, 3))
        ),
    )
    assert shifted.format == Format(2, 3, 2)
    assert shifted.verify()


def test_symmetries_preserve_scheme_laws():
    rng = random.Random(17)
    for fmt in (Format(2, 2, 2), Format(2, 2, 3), Format(3, 3, 3)):
        s = walked_standard(rng, fmt, 5)
        flips = len(enumerate_flips(s))
        for _ in range(8):
            g = random_symmetry(s.format, rng)
            image = apply_symmetry(s, g)
            assert image.rank == s.rank
            assert image.verify()
            assert len(enumerate_flips(image)) == flips
            assert hash_invariant(image) == hash_invariant(s)
            assert pair_profile(image) == pair_profile(s)


def test_permutation_sandwich_fixes_standard():
    s = standard_scheme(Format(2, 2, 2))
    swap = BitMatrix.from_text("01,10")
    g = SymmetryElement(0, 0, (swap, swap, swap))
    assert apply_symmetry(s, g) == s
    shear = BitMatrix.from_text("11,01")
    h = SymmetryElement(0, 0, (shear, swap, swap))
    moved = apply_symmetry(s, h)
    assert moved != s and moved.verify()


def test_canonical_form_is_idempotent_and_orbit_constant():
    rng = random.Random(23)
    for s in (fixture("strassen_222"), standard_scheme(Format(2, 2, 2))):
        base = canonical_form(s)
        assert canonical_form(base) == base
        for _ in range(25):
            g = random_symmetry(s.format, rng)
            assert canonical_form(apply_symmetry(s, g)) == base


def test_all_standard_222_flip_images_share_canonical_form():
    s = standard_scheme(Format(2, 2, 2))
    from flipgraph.moves import apply_flip

    forms = {canonical_form(apply_flip(s, m)) for m in enumerate_flips(s)}
    assert len(forms) == 1
    assert forms.pop() != canonical_form(s)


def test_canonical_form_budget_error():
    with pytest.raises(OrbitBudgetError, match="hash_invariant"):
        canonical_form(standard_scheme(Format(3, 3, 3)))


def test_orbit_raw_forms_closed():
    s = fixture("strassen_222")
    orbit = orbit_raw_forms(s)
    assert tuple(s.raw()) in orbit
    rng = random.Random(5)
    g = random_symmetry(s.format, rng)
    image = apply_symmetry(s, g)
    assert orbit_raw_forms(image) == orbit


def test_fingerprints_separate_fixtures():
    standard = standard_scheme(Format(2, 2, 2))
    isolated = fixture("isolated_222_rank8")
    assert standard.rank == isolated.rank == 8
    assert hash_invariant(standard) != hash_invariant(isolated)


def test_equivalent_small_format():
    rng = random.Random(31)
    standard = standard_scheme(Format(2, 2, 2))
    isolated = fixture("isolated_222_rank8")
    strassen = fixture("strassen_222")
    assert equivalent(standard, standard)
    assert not equivalent(standard, isolated)
    assert not equivalent(standard, strassen)
    for _ in range(5):
        g = random_symmetry(standard.format, rng)
        assert equivalent(standard, apply_symmetry(standard, g))
    assert not equivalent(standard, standard_scheme(Format(2, 2, 3)))


def test_equivalent_large_format_search_path():
    rng = random.Random(37)
    s = standard_scheme(Format(3, 3, 3))
    for _ in range(3):
        g = random_symmetry(s.format, rng)
        image = apply_symmetry(s, g)
        assert equivalent(s, image)
        assert _equivalent_search(s, image)
    walked = walked_standard(rng, Format(3, 3, 3), 1)
    assert not _equivalent_search(s, walked)
    assert not equivalent(s, walked)


def test_random_symmetry_is_seed_deterministic():
    a = random_symmetry(Format(2, 2, 2), random.Random(99))
    b = random_symmetry(Format(2, 2, 2), random.Random(99))
    assert a == b
