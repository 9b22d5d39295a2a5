"""Command-line front end: verify, walk, search, explore, export, lift.

Every command prints deterministic key=value lines to stdout; commands that
write files take --out and leave a manifest.txt recording the exact
configuration, the artifacts written, and the outcome, so a finished run can
be replayed byte for byte from its manifest.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import graph
from .lift import (
    DEFAULT_TARGET_ORDER,
    LiftState,
    lift,
    rational_reconstruct,
    reconstruction_bound,
)
from .rng import derive_seed
from .scheme import (
    Format,
    ParseError,
    RationalScheme,
    Scheme,
    fixture,
    load_scheme_text,
    standard_scheme,
)
from .search import PoolConfig, WalkTrace, descend, pool_search

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_BUDGET_EXHAUSTED = 3
EXIT_LIFT_FAILED = 4


class CliError(Exception):
    """A user-facing failure carrying its exit code."""

    def __init__(self, message: str, code: int = EXIT_INVALID_INPUT) -> None:
        super().__init__(message)
        self.code = code


def _flag(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    return str(value)


@dataclass
class RunManifest:
    """Key=value record of one run: configuration, artifacts, outcome."""

    command: str
    config: dict[str, object] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    outcome: dict[str, object] = field(default_factory=dict)
    wall_ms: int = 0

    def lines(self) -> list[str]:
        out = [f"command={self.command}"]
        out.extend(f"{k}={_flag(v)}" for k, v in self.config.items())
        out.extend(f"artifact={name}" for name in self.artifacts)
        out.extend(f"{k}={_flag(v)}" for k, v in self.outcome.items())
        out.append(f"wall_ms={self.wall_ms}")
        return out

    def render(self) -> str:
        return "\n".join(self.lines()) + "\n"


class _Workspace:
    """Artifact writer for one run; no-op when no output directory is set."""

    def __init__(self, out: Optional[str], manifest: RunManifest) -> None:
        self.dir = Path(out) if out is not None else None
        self.manifest = manifest
        self.started = time.perf_counter()
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        if self.dir is None:
            return
        (self.dir / name).write_text(text)
        self.manifest.artifacts.append(name)

    def finish(self) -> None:
        elapsed = time.perf_counter() - self.started
        self.manifest.wall_ms = int(elapsed * 1000)
        if self.dir is not None:
            (self.dir / "manifest.txt").write_text(self.manifest.render())


def _emit(key: str, value: object) -> None:
    print(f"{key}={_flag(value)}")


def _parse_format(text: str) -> Format:
    try:
        return Format.parse(text)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _load_scheme_ref(ref: str) -> "Scheme | RationalScheme":
    """A scheme from a file path or a built-in fixture name."""
    path = Path(ref)
    if path.exists():
        try:
            return load_scheme_text(path.read_text())
        except (ParseError, ValueError) as exc:
            raise CliError(f"cannot parse {ref}: {exc}") from exc
    try:
        return fixture(ref)
    except ValueError as exc:
        raise CliError(f"no such file or fixture: {ref}") from exc


def _gf2_scheme_ref(ref: str) -> Scheme:
    s = _load_scheme_ref(ref)
    if not isinstance(s, Scheme):
        raise CliError(f"{ref} holds a rational scheme; a GF(2) scheme is required")
    return s


def _start_scheme(args: argparse.Namespace) -> tuple[Scheme, str]:
    """The walk start and its manifest description."""
    if getattr(args, "start", None):
        return _gf2_scheme_ref(args.start), args.start
    if args.format:
        fmt = _parse_format(args.format)
        return standard_scheme(fmt), f"standard:{fmt}"
    raise CliError("provide --start or --format")


def _seed_value(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    return int.from_bytes(os.urandom(8), "big")


# ---------------------------------------------------------------------------
# Commands.


def cmd_verify(args: argparse.Namespace) -> int:
    s = _load_scheme_ref(args.path)
    domain = "rational" if isinstance(s, RationalScheme) else "gf2"
    valid = s.verify()
    _emit("format", s.format)
    _emit("rank", s.rank)
    _emit("domain", domain)
    _emit("valid", valid)
    return EXIT_OK if valid else EXIT_INVALID_INPUT


def cmd_walk(args: argparse.Namespace) -> int:
    start, described = _start_scheme(args)
    seed = _seed_value(args)
    manifest = RunManifest(
        "walk",
        config={
            "start": described,
            "limit": args.limit,
            "seed": seed,
            "check_neighbors": args.check_neighbors,
            "stop_rank": args.stop_rank,
        },
    )
    ws = _Workspace(args.out, manifest)
    trace = WalkTrace()
    result = descend(
        start,
        path_limit=args.limit,
        seed=seed,
        check_neighbors=args.check_neighbors,
        stop_rank=args.stop_rank,
        trace=trace,
    )
    _emit("seed", seed)
    _emit("start_rank", start.rank)
    _emit("final_rank", result.rank)
    _emit("steps", trace.steps)
    _emit("improved", result.rank < start.rank)
    manifest.outcome = {
        "start_rank": start.rank,
        "final_rank": result.rank,
        "steps": trace.steps,
    }
    ws.write("result.txt", result.serialize())
    ws.write(
        "trace.csv", "\n".join(["walk_id,step,rank"] + trace.csv_rows()) + "\n"
    )
    ws.finish()
    return EXIT_OK


def _search_pool(args: argparse.Namespace) -> tuple[list[Scheme], str]:
    if args.pool:
        pool_dir = Path(args.pool)
        if not pool_dir.is_dir():
            raise CliError(f"pool directory not found: {args.pool}")
        files = sorted(pool_dir.glob("*.txt"))
        if not files:
            raise CliError(f"no scheme files in {args.pool}")
        return [_gf2_scheme_ref(str(f)) for f in files], args.pool
    if not args.format:
        raise CliError("provide --format or --pool")
    fmt = _parse_format(args.format)
    return [standard_scheme(fmt)], f"standard:{fmt}"


def cmd_search(args: argparse.Namespace) -> int:
    pool, described = _search_pool(args)
    seed = _seed_value(args)
    manifest = RunManifest(
        "search",
        config={
            "pool": described,
            "limit": args.limit,
            "pool_size": args.pool_size,
            "target": args.target,
            "seed": seed,
            "workers": args.workers,
            "check_neighbors": args.check_neighbors,
            "budget": args.budget,
        },
    )
    ws = _Workspace(args.out, manifest)
    start_rank = pool[0].rank
    if args.target > start_rank:
        schemes: Sequence[Scheme] = pool
        status, attempts, echoed = "ok", 0, True
    else:
        cfg = PoolConfig(
            path_limit=args.limit,
            pool_size=args.pool_size,
            target_rank=args.target,
            master_seed=seed,
            worker_count=args.workers,
            check_neighbors=args.check_neighbors,
            attempt_budget=args.budget,
        )
        result = pool_search(pool, cfg)
        schemes, status, attempts = result.schemes, result.status, result.attempts
        echoed = False
    for i, s in enumerate(schemes):
        ws.write(f"scheme_{i:03d}.txt", s.serialize())
    _emit("seed", seed)
    _emit("status", status)
    _emit("found", len(schemes))
    _emit("attempts", attempts)
    _emit("echoed", echoed)
    manifest.outcome = {
        "status": status,
        "found": len(schemes),
        "attempts": attempts,
        "echoed": echoed,
    }
    ws.finish()
    return EXIT_OK if status == "ok" else EXIT_BUDGET_EXHAUSTED


def _component(args: argparse.Namespace) -> tuple["graph.Component", str]:
    start, described = _start_scheme(args)
    comp = graph.explore_component(start, args.cap, budget=args.budget)
    return comp, described


def cmd_explore(args: argparse.Namespace) -> int:
    comp, described = _component(args)
    manifest = RunManifest(
        "explore",
        config={
            "start": described,
            "cap": args.cap,
            "budget": args.budget,
        },
    )
    ws = _Workspace(args.out, manifest)
    stats = comp.stats
    for line in stats.key_value_lines():
        print(line)
    manifest.outcome = {
        "vertices": stats.vertex_count,
        "flip_edges": stats.flip_edge_count,
        "reduction_edges": stats.reduction_edge_count,
        "complete": stats.complete,
    }
    ws.write(
        "stats.txt", "\n".join(stats.key_value_lines()) + "\n"
    )
    ws.write(
        "vertices.txt", "\n".join(v.serialize() for v in comp.vertices)
    )
    ws.finish()
    return EXIT_OK if stats.complete else EXIT_BUDGET_EXHAUSTED


def cmd_distance(args: argparse.Namespace) -> int:
    src = _gf2_scheme_ref(args.src)
    dst = _gf2_scheme_ref(args.dst)
    if src.format != dst.format:
        raise CliError("schemes have different formats")
    hops = graph.distance(src, dst, args.cap, budget=args.budget)
    _emit("distance", "unreachable" if hops is None else hops)
    return EXIT_OK if hops is not None else EXIT_BUDGET_EXHAUSTED


def cmd_dot(args: argparse.Namespace) -> int:
    comp, described = _component(args)
    text = graph.export_dot(comp)
    manifest = RunManifest(
        "dot",
        config={"start": described, "cap": args.cap, "budget": args.budget},
        outcome={
            "vertices": len(comp.vertices),
            "complete": comp.stats.complete,
        },
    )
    ws = _Workspace(args.out, manifest)
    if ws.dir is None:
        sys.stdout.write(text)
    else:
        ws.write("graph.dot", text)
    ws.finish()
    return EXIT_OK if comp.stats.complete else EXIT_BUDGET_EXHAUSTED


def cmd_lift(args: argparse.Namespace) -> int:
    s = _gf2_scheme_ref(args.path)
    if args.order < 1:
        raise CliError("order must be at least 1")
    manifest = RunManifest(
        "lift",
        config={
            "input": args.path,
            "order": args.order,
            "retries": args.retries,
            "policy": "first-solution-with-kernel-retries",
        },
    )
    ws = _Workspace(args.out, manifest)
    orders = [1]

    def accept(state: LiftState) -> bool:
        candidate = rational_reconstruct(state)
        return candidate is not None and candidate.verify()

    state = lift(
        s,
        args.order,
        retry_budget=args.retries,
        accept=accept,
        progress=lambda st: orders.append(st.order),
    )
    bound = reconstruction_bound(args.order)
    _emit("order", args.order)
    _emit("bound", bound)
    reached = max(orders)
    if state is None:
        reason = (
            "no_refinement" if reached < args.order else "reconstruction_failed"
        )
        _emit("status", "failed")
        _emit("stuck_order", reached)
        _emit("reason", reason)
        manifest.outcome = {
            "status": "failed",
            "stuck_order": reached,
            "reason": reason,
        }
        ws.finish()
        return EXIT_LIFT_FAILED
    rational = rational_reconstruct(state)
    if rational is None or not rational.verify():
        raise CliError("accepted state failed reconstruction", EXIT_LIFT_FAILED)
    _emit("status", "lifted")
    _emit("order_reached", state.order)
    _emit("rank", rational.rank)
    _emit("verified", True)
    manifest.outcome = {
        "status": "lifted",
        "order_reached": state.order,
        "rank": rational.rank,
        "verified": True,
    }
    ws.write("rational.txt", rational.serialize())
    ws.finish()
    return EXIT_OK


def cmd_telemetry(args: argparse.Namespace) -> int:
    start, described = _start_scheme(args)
    seed = _seed_value(args)
    if args.walks < 1:
        raise CliError("walks must be at least 1")
    manifest = RunManifest(
        "telemetry",
        config={
            "start": described,
            "walks": args.walks,
            "limit": args.limit,
            "seed": seed,
            "check_neighbors": args.check_neighbors,
            "stop_rank": args.stop_rank,
        },
    )
    ws = _Workspace(args.out, manifest)
    traces = []
    for walk_id in range(args.walks):
        trace = WalkTrace(walk_id=walk_id)
        descend(
            start,
            path_limit=args.limit,
            seed=derive_seed(seed, walk_id),
            check_neighbors=args.check_neighbors,
            stop_rank=args.stop_rank,
            trace=trace,
        )
        traces.append(trace)
    rows = ["walk_id,step,rank"]
    for trace in traces:
        rows.extend(trace.csv_rows())
    ws.write("telemetry.csv", "\n".join(rows) + "\n")
    if ws.dir is not None:
        from .plots import render_telemetry

        render_telemetry(traces, ws.dir / "telemetry.png")
        manifest.artifacts.append("telemetry.png")
    best = min(t.final_rank for t in traces if t.final_rank is not None)
    _emit("seed", seed)
    _emit("walks", args.walks)
    _emit("start_rank", start.rank)
    _emit("best_rank", best)
    manifest.outcome = {"best_rank": best}
    ws.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser.


def _add_start_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", help="format n,m,p; start from its standard scheme")
    p.add_argument("--start", help="start scheme: a file path or fixture name")


def _add_walk_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--limit", type=int, required=True, help="total flip budget")
    p.add_argument("--seed", type=int, help="walk seed; generated if omitted")
    p.add_argument(
        "--check-neighbors",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="test every flip neighbor for a reduction at each step",
    )
    p.add_argument("--stop-rank", type=int, help="stop once this rank is reached")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flipgraph",
        description="Search, explore, verify, and lift matrix multiplication schemes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a scheme file against the Brent equations")
    p.add_argument("path", help="scheme file (GF(2) or rational) or fixture name")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("walk", help="one seeded descent through the flip graph")
    _add_start_options(p)
    _add_walk_options(p)
    p.add_argument("--out", help="directory for result.txt, trace.csv, manifest.txt")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("search", help="fill a pool of schemes at a target rank")
    p.add_argument("--format", help="format n,m,p; search from its standard scheme")
    p.add_argument("--pool", help="directory of scheme files to start from")
    p.add_argument("--limit", type=int, required=True, help="per-walk flip budget")
    p.add_argument("--pool-size", type=int, default=1, help="schemes to collect")
    p.add_argument("--target", type=int, required=True, help="target rank")
    p.add_argument("--seed", type=int, help="master seed; generated if omitted")
    p.add_argument("--workers", type=int, default=1, help="parallel walkers")
    p.add_argument(
        "--check-neighbors",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="test every flip neighbor for a reduction at each step",
    )
    p.add_argument("--budget", type=int, help="total attempt budget")
    p.add_argument("--out", required=True, help="directory for schemes and manifest")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("explore", help="census of the component around a scheme")
    _add_start_options(p)
    p.add_argument("--cap", type=int, help="ignore schemes above this rank")
    p.add_argument(
        "--budget", type=int, default=graph.DEFAULT_VERTEX_BUDGET,
        help="vertex budget before giving up",
    )
    p.add_argument("--out", help="directory for stats.txt, vertices.txt, manifest.txt")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("distance", help="hops between two schemes in the flip graph")
    p.add_argument("src", help="scheme file or fixture name")
    p.add_argument("dst", help="scheme file or fixture name")
    p.add_argument("--cap", type=int, help="ignore schemes above this rank")
    p.add_argument(
        "--budget", type=int, default=graph.DEFAULT_VERTEX_BUDGET,
        help="vertex budget before giving up",
    )
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("dot", help="export a component as DOT text")
    _add_start_options(p)
    p.add_argument("--cap", type=int, help="ignore schemes above this rank")
    p.add_argument(
        "--budget", type=int, default=graph.DEFAULT_VERTEX_BUDGET,
        help="vertex budget before giving up",
    )
    p.add_argument("--out", help="directory for graph.dot and manifest.txt")
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("lift", help="refine a GF(2) scheme to a rational scheme")
    p.add_argument("path", help="GF(2) scheme file or fixture name")
    p.add_argument("--order", type=int, default=DEFAULT_TARGET_ORDER,
                   help="2-adic approximation order to reach")
    p.add_argument("--retries", type=int, default=0,
                   help="alternative digit choices to explore on failure")
    p.add_argument("--out", help="directory for rational.txt and manifest.txt")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("telemetry", help="rank-vs-step data and plot for seeded walks")
    _add_start_options(p)
    _add_walk_options(p)
    p.add_argument("--walks", type=int, default=5, help="number of walks")
    p.add_argument("--out", required=True,
                   help="directory for telemetry.csv, telemetry.png, manifest.txt")
    p.set_defaults(func=cmd_telemetry)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
