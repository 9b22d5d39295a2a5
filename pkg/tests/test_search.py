"""Seeded walk search: single walks, chained descents, pooled restarts."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flipgraph.moves import apply_reduction, find_reduction
from flipgraph.rng import SplitMix64, derive_seed, mix64
from flipgraph.scheme import Format, Scheme, fixture, standard_scheme
from flipgraph.search import (
    PoolConfig,
    WalkConfig,
    WalkTrace,
    descend,
    pool_search,
    random_walk,
    walk_telemetry,
)

from helpers import reference_walk


# well-known splitmix64 output for state 0
SEED0_STREAM = (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F)


def test_generator_reference_stream():
    rng = SplitMix64(0)
    assert tuple(rng.next() for _ in range(3)) == SEED0_STREAM


def test_generator_masks_to_64_bits():
    rng = SplitMix64(2**64 + 1)
    assert rng.next() == SplitMix64(1).next()
    assert mix64(2**70) == mix64(2**70 % 2**64)


@given(st.integers(0, 2**64 - 1), st.integers(1, 10**9))
@settings(max_examples=60, deadline=None)
def test_bounded_draws_stay_in_range(seed, bound):
    rng = SplitMix64(seed)
    draws = [rng.below(bound) for _ in range(8)]
    assert all(0 <= v < bound for v in draws)
    again = SplitMix64(seed)
    assert draws == [again.below(bound) for _ in range(8)]


def test_bounded_draw_rejects_empty_range():
    with pytest.raises(ValueError):
        SplitMix64(1).below(0)


def test_derived_seeds_depend_on_labels_and_order():
    seeds = {
        derive_seed(1),
        derive_seed(1, 2),
        derive_seed(1, 2, 3),
        derive_seed(1, 3, 2),
        derive_seed(2, 2, 3),
    }
    assert len(seeds) == 5
    assert all(0 <= v < 2**64 for v in seeds)
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)


def test_walk_config_rejects_negative_limit():
    with pytest.raises(ValueError, match="non-negative"):
        WalkConfig(path_limit=-1, seed=0)


def test_walk_rejects_invalid_scheme():
    broken = Scheme(Format(2, 2, 2), fixture("strassen_222").elements[:-1])
    with pytest.raises(ValueError, match="verification"):
        random_walk(broken, WalkConfig(path_limit=10, seed=0))


@pytest.mark.parametrize("seed,steps", [(0, 151), (7, 73), (11, 390)])
def test_walk_descends_one_rank(seed, steps):
    s = standard_scheme(Format(2, 2, 2))
    trace = WalkTrace(walk_id=seed)
    cfg = WalkConfig(path_limit=10_000, seed=seed, telemetry=trace)
    result = random_walk(s, cfg)
    assert result is not None
    assert result.rank == 7
    assert result.format == s.format
    assert result.verify()
    assert trace.events == [(0, 8), (steps, 7)]
    assert trace.final_rank == 7
    assert trace.steps == steps
    assert walk_telemetry(trace) == [(steps, 7)]
    assert trace.csv_rows() == [f"{seed},0,8", f"{seed},{steps},7"]
    again = random_walk(s, WalkConfig(path_limit=10_000, seed=seed))
    assert again is not None and again.raw() == result.raw()


@pytest.mark.parametrize("seed", [7, 19])
def test_walk_matches_stepwise_reference(seed):
    s = standard_scheme(Format(2, 2, 2))
    for check in (True, False):
        expected, _, _ = reference_walk(s, 400, seed, check)
        got = random_walk(
            s, WalkConfig(path_limit=400, seed=seed, check_neighbors=check)
        )
        if expected is None:
            assert got is None
        else:
            assert got is not None and got.raw() == expected.raw()


@pytest.mark.parametrize("name", ["strassen_222", "isolated_222_rank8"])
def test_flip_free_starts_return_none(name):
    s = fixture(name)
    assert random_walk(s, WalkConfig(path_limit=1000, seed=5)) is None


def test_exhausted_walk_returns_none():
    floor = standard_scheme(Format(1, 2, 2))
    trace = WalkTrace()
    assert random_walk(
        floor, WalkConfig(path_limit=500, seed=3, telemetry=trace)
    ) is None
    assert trace.events == [(0, 4), (500, 4)]
    assert walk_telemetry(trace) == []


def _split_once(s: Scheme) -> Scheme:
    """A reducible one-rank-higher neighbor of ``s`` via a factor split."""
    from flipgraph.moves import split
    from flipgraph.scheme import BitMatrix

    rows, cols = s.format.dims[0]
    old = s.elements[0].a
    for bits in range(1, 1 << (rows * cols)):
        if bits == old.bits:
            continue
        try:
            return split(s, 0, 0, BitMatrix(rows, cols, bits))
        except ValueError:
            continue
    raise AssertionError("no legal split found")


def test_reducible_start_reduces_without_budget():
    s = standard_scheme(Format(2, 2, 2))
    grown = _split_once(s)
    assert grown.rank == 9 and grown.verify()
    cert = find_reduction(grown)
    assert cert is not None
    expected = apply_reduction(grown, cert)
    trace = WalkTrace()
    result = random_walk(
        grown, WalkConfig(path_limit=0, seed=0, telemetry=trace)
    )
    assert result is not None and result.raw() == expected.raw()
    assert trace.events == [(0, 9), (0, 8)]
    assert walk_telemetry(trace) == [(0, 8)]


def test_telemetry_requires_a_trace():
    with pytest.raises(ValueError, match="telemetry"):
        walk_telemetry(None)


@given(st.integers(0, 2**64 - 1))
@settings(max_examples=25, deadline=None)
def test_walk_results_always_improve_and_verify(seed):
    s = standard_scheme(Format(2, 2, 2))
    result = random_walk(
        s, WalkConfig(path_limit=300, seed=seed, check_neighbors=False)
    )
    assert result is None or (result.rank <= 7 and result.verify())


def test_descend_rejects_negative_budget():
    with pytest.raises(ValueError, match="non-negative"):
        descend(standard_scheme(Format(2, 2, 2)), path_limit=-1, seed=0)


def test_descend_reaches_the_floor():
    s = standard_scheme(Format(2, 2, 2))
    trace = WalkTrace()
    result = descend(s, path_limit=20_000, seed=1, trace=trace)
    assert result.rank == 7 and result.verify()
    assert trace.events == [(0, 8), (15, 7)]
    assert walk_telemetry(trace) == [(15, 7)]
    steps = [e[0] for e in trace.events]
    ranks = [e[1] for e in trace.events]
    assert steps == sorted(steps)
    assert ranks == sorted(ranks, reverse=True)


def test_descend_stops_at_requested_rank():
    s = standard_scheme(Format(3, 3, 3))
    trace = WalkTrace()
    result = descend(
        s, path_limit=100_000, seed=0, stop_rank=26, trace=trace
    )
    assert result.rank == 26 and result.verify()
    assert trace.events == [(0, 27), (1513, 26)]


def test_descend_with_zero_budget_returns_start():
    s = standard_scheme(Format(2, 2, 2))
    trace = WalkTrace()
    result = descend(s, path_limit=0, seed=0, trace=trace)
    assert result.raw() == s.raw()
    assert trace.events == [(0, 8)]


def test_descend_reduces_a_reducible_start_for_free():
    grown = _split_once(standard_scheme(Format(2, 2, 2)))
    result = descend(grown, path_limit=0, seed=0)
    assert result.rank == 8 and result.verify()


@pytest.mark.parametrize(
    "kwargs,msg",
    [
        (dict(path_limit=-1, pool_size=1, target_rank=7, master_seed=0), "non-negative"),
        (dict(path_limit=1, pool_size=0, target_rank=7, master_seed=0), "pool_size"),
        (dict(path_limit=1, pool_size=1, target_rank=0, master_seed=0), "target_rank"),
        (dict(path_limit=1, pool_size=1, target_rank=7, master_seed=0, worker_count=0), "worker_count"),
        (dict(path_limit=1, pool_size=1, target_rank=7, master_seed=0, attempt_budget=0), "attempt_budget"),
    ],
)
def test_pool_config_validation(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        PoolConfig(**kwargs)


def test_pool_search_input_validation():
    std = standard_scheme(Format(2, 2, 2))
    cfg = PoolConfig(path_limit=10, pool_size=1, target_rank=7, master_seed=0)
    with pytest.raises(ValueError, match="empty"):
        pool_search([], cfg)
    with pytest.raises(ValueError, match="format"):
        pool_search([std, standard_scheme(Format(2, 2, 3))], cfg)
    with pytest.raises(ValueError, match="rank"):
        pool_search([std, fixture("strassen_222")], cfg)
    broken = Scheme(Format(2, 2, 2), fixture("strassen_222").elements[:-1])
    with pytest.raises(ValueError, match="verification"):
        pool_search([broken], cfg)
    with pytest.raises(ValueError, match="above the pool rank"):
        pool_search(
            [fixture("strassen_222")],
            PoolConfig(path_limit=10, pool_size=1, target_rank=8, master_seed=0),
        )


def test_pool_search_fills_a_distinct_verified_pool():
    s = standard_scheme(Format(2, 2, 2))
    cfg = PoolConfig(path_limit=2000, pool_size=5, target_rank=7, master_seed=3)
    result = pool_search([s], cfg)
    assert result.ok and result.status == "ok"
    assert len(result.schemes) == 5
    assert all(t.rank == 7 and t.verify() for t in result.schemes)
    keys = {tuple(sorted(t.raw())) for t in result.schemes}
    assert len(keys) == 5
    again = pool_search([s], cfg)
    assert [a.raw() for a in again.schemes] == [b.raw() for b in result.schemes]
    assert again.attempts == result.attempts


def test_pool_search_is_reproducible_with_workers():
    s = standard_scheme(Format(2, 2, 2))
    cfg = PoolConfig(
        path_limit=2000, pool_size=5, target_rank=7, master_seed=3,
        worker_count=3,
    )
    first = pool_search([s], cfg)
    second = pool_search([s], cfg)
    assert first.ok and second.ok
    assert [a.raw() for a in first.schemes] == [b.raw() for b in second.schemes]
    assert first.attempts == second.attempts


def test_pool_search_descends_through_intermediate_ranks():
    s = standard_scheme(Format(3, 3, 3))
    cfg = PoolConfig(path_limit=8000, pool_size=2, target_rank=25, master_seed=9)
    result = pool_search([s], cfg)
    assert result.ok
    assert [t.rank for t in result.schemes] == [25, 25]
    assert all(t.verify() for t in result.schemes)


def test_pool_search_at_target_returns_pool_unchanged():
    strassen = fixture("strassen_222")
    cfg = PoolConfig(path_limit=10, pool_size=1, target_rank=7, master_seed=0)
    result = pool_search([strassen], cfg)
    assert result.ok and result.attempts == 0
    assert [t.raw() for t in result.schemes] == [strassen.raw()]


def test_pool_search_reports_budget_exhaustion():
    strassen = fixture("strassen_222")
    cfg = PoolConfig(
        path_limit=50, pool_size=1, target_rank=6, master_seed=0,
        attempt_budget=4,
    )
    result = pool_search([strassen], cfg)
    assert not result.ok
    assert result.status == "budget_exhausted"
    assert result.attempts == 4
    assert result.schemes == ()
