"""Random-walk search for lower-rank schemes.

random_walk performs one seeded walk in the flip graph and returns the first
reduction it finds; descend chains such walks across rank levels under one
total step budget; pool_search grows pools of distinct schemes level by level
until the target rank holds the requested number.  All randomness flows from
explicit 64-bit seeds through SplitMix64, so every search is replayable, and
every returned scheme is re-verified before it leaves this module.

The inner loop of a walk runs in the compiled engine, which reports how it
stopped; the actual rank-changing rewrite always happens here, through the
same flip and reduction primitives the rest of the package uses.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import moves, walk_kernel
from .rng import MASK64, SplitMix64, derive_seed
from .scheme import Scheme

__all__ = [
    "WalkConfig",
    "WalkTrace",
    "PoolConfig",
    "PoolResult",
    "random_walk",
    "descend",
    "pool_search",
    "walk_telemetry",
]

DEFAULT_ATTEMPTS_PER_SCHEME = 200


@dataclass
class WalkTrace:
    """Rank milestones of one walk as (step, rank) events, steps ascending."""

    walk_id: int = 0
    events: list[tuple[int, int]] = field(default_factory=list)

    def note(self, step: int, rank: int) -> None:
        self.events.append((step, rank))

    @property
    def final_rank(self) -> Optional[int]:
        return self.events[-1][1] if self.events else None

    @property
    def steps(self) -> int:
        return self.events[-1][0] if self.events else 0

    def csv_rows(self) -> list[str]:
        """One ``walk_id,step,rank`` row per event."""
        return [f"{self.walk_id},{s},{r}" for s, r in self.events]


def walk_telemetry(trace: WalkTrace) -> list[tuple[int, int]]:
    """The (step, rank) points at which the traced rank dropped."""
    if trace is None:
        raise ValueError("telemetry was not recorded")
    drops: list[tuple[int, int]] = []
    prev: Optional[int] = None
    for step, rank in trace.events:
        if prev is not None and rank < prev:
            drops.append((step, rank))
        prev = rank
    return drops


@dataclass(frozen=True)
class WalkConfig:
    """One walk: step limit, seed, neighbor checking, optional trace sink."""

    path_limit: int
    seed: int
    check_neighbors: bool = True
    telemetry: WalkTrace | None = None

    def __post_init__(self) -> None:
        if self.path_limit < 0:
            raise ValueError("path_limit must be non-negative")


@dataclass(frozen=True)
class PoolConfig:
    """Pool search: per-walk step limit, pool size, target rank, seeding.

    attempt_budget caps the total number of walks across all rank levels;
    None picks a default proportional to pool_size and the level distance.
    check_neighbors and attempt_budget extend the base configuration; both
    default to the behavior used throughout the package.
    """

    path_limit: int
    pool_size: int
    target_rank: int
    master_seed: int
    worker_count: int = 1
    check_neighbors: bool = True
    attempt_budget: int | None = None

    def __post_init__(self) -> None:
        if self.path_limit < 0:
            raise ValueError("path_limit must be non-negative")
        if self.pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        if self.target_rank < 1:
            raise ValueError("target_rank must be at least 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")
        if self.attempt_budget is not None and self.attempt_budget < 1:
            raise ValueError("attempt_budget must be at least 1")


@dataclass(frozen=True)
class PoolResult:
    """Outcome of a pool search: the schemes found and how the run ended."""

    schemes: tuple[Scheme, ...]
    status: str
    attempts: int

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _checked(result: Scheme, start_rank: int) -> Scheme:
    if result.rank > start_rank - 1 or not result.verify():
        raise RuntimeError("walk produced an invalid scheme")
    return result


def random_walk(s: Scheme, cfg: WalkConfig) -> Optional[Scheme]:
    """One seeded walk; returns a verified lower-rank scheme or None.

    The start scheme is reduced immediately if it admits a reduction, even
    with a zero step limit; a flip-free start returns None.  Otherwise each
    iteration reports a reducible current scheme, then (when enabled) the
    first reducible flip neighbor in move order, and otherwise steps to a
    uniformly random flip.  Exhausting the limit returns None.
    """
    if not s.verify():
        raise ValueError("scheme fails verification")
    trace = cfg.telemetry
    if trace is not None:
        trace.note(0, s.rank)
    cert = moves.find_reduction(s)
    if cert is not None:
        result = _checked(moves.apply_reduction(s, cert), s.rank)
        if trace is not None:
            trace.note(0, result.rank)
        return result
    walk = walk_kernel.KernelWalk(s)
    if walk.move_count() == 0:
        return None
    rng_state = np.array([cfg.seed & MASK64], dtype=np.uint64)
    status, consumed = walk.run(rng_state, cfg.path_limit, cfg.check_neighbors)
    if status in (walk_kernel.EXHAUSTED, walk_kernel.NO_FLIPS):
        if trace is not None:
            trace.note(consumed, s.rank)
        return None
    current = walk.scheme()
    if status == walk_kernel.NEIGHBOR_REDUCIBLE:
        i, j, role, choice = walk.last_move
        current = moves.apply_flip(current, moves.FlipMove(i, j, role, choice))
    cert = moves.find_reduction(current)
    if cert is None:
        raise RuntimeError("walk engine reported a reduction that is absent")
    result = _checked(moves.apply_reduction(current, cert), s.rank)
    if trace is not None:
        trace.note(consumed, result.rank)
    return result


def descend(
    s: Scheme,
    *,
    path_limit: int,
    seed: int,
    check_neighbors: bool = True,
    stop_rank: int | None = None,
    trace: WalkTrace | None = None,
) -> Scheme:
    """Chain walks downward under one total step budget.

    Each rank level runs its own walk with a seed derived from the level
    index; the step budget is shared across levels, so the returned scheme is
    the lowest rank reachable within ``path_limit`` flips in total.  With
    stop_rank set, the descent stops once the rank is at or below it.
    """
    if path_limit < 0:
        raise ValueError("path_limit must be non-negative")
    current = s
    spent = 0
    level = 0
    if trace is not None:
        trace.note(0, s.rank)
    while stop_rank is None or current.rank > stop_rank:
        sub = WalkTrace()
        cfg = WalkConfig(
            path_limit=path_limit - spent,
            seed=derive_seed(seed, level),
            check_neighbors=check_neighbors,
            telemetry=sub,
        )
        result = random_walk(current, cfg)
        spent += sub.steps
        if result is None:
            break
        current = result
        if trace is not None:
            trace.note(spent, current.rank)
        level += 1
    if trace is not None and (not trace.events or trace.events[-1][0] < spent):
        trace.note(spent, current.rank)
    return current


def _scheme_key(s: Scheme) -> tuple:
    return tuple(sorted(s.raw()))


def pool_search(pool: Iterable[Scheme], cfg: PoolConfig) -> PoolResult:
    """Fill a pool of distinct schemes at the target rank by seeded walks.

    Walks start from the active rank level, initially the input pool's rank;
    results are collected per rank level with duplicates (by sorted element
    list) dropped, and the search moves its active level down whenever a
    lower level has filled to pool_size.  Attempts are scheduled in waves of
    worker_count and merged in attempt order, so a fixed master seed and
    worker count replay exactly.  Exhausting the attempt budget returns the
    partial pool with status "budget_exhausted".
    """
    schemes = list(pool)
    if not schemes:
        raise ValueError("pool must not be empty")
    fmt = schemes[0].format
    start_rank = schemes[0].rank
    for t in schemes:
        if t.format != fmt:
            raise ValueError("pool schemes must share one format")
        if t.rank != start_rank:
            raise ValueError("pool schemes must share one rank")
        if not t.verify():
            raise ValueError("pool contains a scheme that fails verification")
    if start_rank == cfg.target_rank:
        return PoolResult(tuple(schemes), "ok", 0)
    if start_rank < cfg.target_rank:
        raise ValueError("target rank is above the pool rank")
    budget = cfg.attempt_budget
    if budget is None:
        budget = (
            DEFAULT_ATTEMPTS_PER_SCHEME
            * cfg.pool_size
            * (start_rank - cfg.target_rank)
        )
    levels: dict[int, list[Scheme]] = {start_rank: []}
    seen: dict[int, set[tuple]] = {start_rank: set()}
    for t in schemes:
        key = _scheme_key(t)
        if key not in seen[start_rank]:
            seen[start_rank].add(key)
            levels[start_rank].append(t)
    active = start_rank
    attempts = 0

    def attempt_walk(job: tuple[Scheme, int]) -> Optional[Scheme]:
        start, walk_seed = job
        walk_cfg = WalkConfig(
            path_limit=cfg.path_limit,
            seed=walk_seed,
            check_neighbors=cfg.check_neighbors,
        )
        return random_walk(start, walk_cfg)

    with ThreadPoolExecutor(max_workers=cfg.worker_count) as executor:
        while True:
            target_pool = levels.get(cfg.target_rank, [])
            if len(target_pool) >= cfg.pool_size:
                return PoolResult(
                    tuple(target_pool[: cfg.pool_size]), "ok", attempts
                )
            for rank in sorted(levels, reverse=True):
                if (
                    cfg.target_rank < rank < active
                    and len(levels[rank]) >= cfg.pool_size
                ):
                    active = rank
                    break
            if attempts >= budget:
                return PoolResult(
                    tuple(target_pool), "budget_exhausted", attempts
                )
            source = levels[active]
            wave = min(cfg.worker_count, budget - attempts)
            jobs = []
            for offset in range(wave):
                pick_rng = SplitMix64(derive_seed(cfg.master_seed, attempts + offset))
                start = source[pick_rng.below(len(source))]
                jobs.append((start, pick_rng.next()))
            results = list(executor.map(attempt_walk, jobs))
            attempts += wave
            for result in results:
                if result is None or result.rank < cfg.target_rank:
                    continue
                rank = result.rank
                bucket = seen.setdefault(rank, set())
                key = _scheme_key(result)
                if key not in bucket:
                    bucket.add(key)
                    levels.setdefault(rank, []).append(result)
