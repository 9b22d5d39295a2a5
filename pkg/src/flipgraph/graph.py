"""Component exploration of the flip graph at orbit granularity.

Vertices are equivalence classes of schemes under the symmetry group,
flip edges are undirected, reduction edges are directed toward the lower
rank level. Provides breadth-first census with statistics, shortest-path
distances, diameters, and DOT rendering.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from . import symmetry
from .moves import (
    ROLE_PAIRS,
    apply_flip,
    apply_reduction,
    enumerate_flips,
    enumerate_reductions,
)
from .scheme import Format, Scheme

DEFAULT_VERTEX_BUDGET = 1_000_000

IDENTITY_MODES = ("auto", "canonical", "pairwise", "fingerprint", "raw")


def _pack(fmt: Format, raws: tuple[tuple[int, int, int], ...]) -> tuple[int, ...]:
    """Pack a sorted raw form into a tuple of ints, preserving order."""
    _, b_bits, g_bits = fmt.role_bits
    high = b_bits + g_bits
    return tuple((a << high) | (b << g_bits) | g for a, b, g in raws)


class _CanonicalIndex:
    """Exact vertex identity via full orbit closure membership."""

    exact = True

    def __init__(self, fmt: Format, orbit_budget: int) -> None:
        self.fmt = fmt
        self.orbit_budget = orbit_budget
        self.reps: list[Scheme] = []
        self._where: dict[tuple[int, ...], int] = {}

    def resolve(self, s: Scheme, allow_new: bool) -> tuple[int | None, bool]:
        key = _pack(self.fmt, s.raw())
        idx = self._where.get(key)
        if idx is not None:
            return idx, False
        if not allow_new:
            return None, False
        forms = symmetry.orbit_raw_forms(s, self.orbit_budget)
        idx = len(self.reps)
        self.reps.append(Scheme.from_raw(self.fmt, min(forms)))
        for form in forms:
            self._where[_pack(self.fmt, form)] = idx
        return idx, True


class _PairwiseIndex:
    """Exact vertex identity via fingerprint buckets plus pairwise checks."""

    exact = True

    def __init__(self, fmt: Format, orbit_budget: int) -> None:
        self.fmt = fmt
        self.orbit_budget = orbit_budget
        self.reps: list[Scheme] = []
        self._buckets: dict[object, list[int]] = {}
        self._raw_hits: dict[tuple[int, ...], int] = {}

    def resolve(self, s: Scheme, allow_new: bool) -> tuple[int | None, bool]:
        key = _pack(self.fmt, s.raw())
        idx = self._raw_hits.get(key)
        if idx is not None:
            return idx, False
        fp = (symmetry.hash_invariant(s), symmetry.pair_profile(s))
        for known in self._buckets.get(fp, ()):
            if symmetry.equivalent(self.reps[known], s, self.orbit_budget):
                self._raw_hits[key] = known
                return known, False
        if not allow_new:
            return None, False
        idx = len(self.reps)
        self.reps.append(s)
        self._buckets.setdefault(fp, []).append(idx)
        self._raw_hits[key] = idx
        return idx, True


class _FingerprintIndex:
    """Approximate vertex identity: fingerprint equality only."""

    exact = False

    def __init__(self, fmt: Format, orbit_budget: int) -> None:
        self.fmt = fmt
        self.reps: list[Scheme] = []
        self._where: dict[object, int] = {}

    def resolve(self, s: Scheme, allow_new: bool) -> tuple[int | None, bool]:
        fp = (symmetry.hash_invariant(s), symmetry.pair_profile(s))
        idx = self._where.get(fp)
        if idx is not None:
            return idx, False
        if not allow_new:
            return None, False
        idx = len(self.reps)
        self.reps.append(s)
        self._where[fp] = idx
        return idx, True


class _RawIndex:
    """Scheme-level identity: no symmetry quotient at all."""

    exact = False

    def __init__(self, fmt: Format, orbit_budget: int) -> None:
        self.fmt = fmt
        self.reps: list[Scheme] = []
        self._where: dict[tuple[int, ...], int] = {}

    def resolve(self, s: Scheme, allow_new: bool) -> tuple[int | None, bool]:
        key = _pack(self.fmt, s.raw())
        idx = self._where.get(key)
        if idx is not None:
            return idx, False
        if not allow_new:
            return None, False
        idx = len(self.reps)
        self.reps.append(s)
        self._where[key] = idx
        return idx, True


_INDEX_TYPES = {
    "canonical": _CanonicalIndex,
    "pairwise": _PairwiseIndex,
    "fingerprint": _FingerprintIndex,
    "raw": _RawIndex,
}


@dataclass(frozen=True)
class ComponentStats:
    """Census numbers for one explored component."""

    vertex_count: int
    flip_edge_count: int
    reduction_edge_count: int
    loop_count: int
    level_sizes: dict[int, int]
    depth_sizes: dict[int, int]
    exact: bool
    complete: bool

    def __post_init__(self) -> None:
        counts = (
            self.vertex_count,
            self.flip_edge_count,
            self.reduction_edge_count,
            self.loop_count,
        )
        if min(counts) < 0:
            raise ValueError("statistics must be non-negative")
        if self.vertex_count != sum(self.level_sizes.values()):
            raise ValueError("vertex count must equal the sum of level sizes")

    def key_value_lines(self) -> list[str]:
        """Machine-readable key=value rendering, deterministic order."""
        flag = {True: "true", False: "false"}
        lines = [
            f"vertices={self.vertex_count}",
            f"flip_edges={self.flip_edge_count}",
            f"reduction_edges={self.reduction_edge_count}",
            f"loops={self.loop_count}",
        ]
        for rank in sorted(self.level_sizes):
            lines.append(f"level_{rank}={self.level_sizes[rank]}")
        for depth in sorted(self.depth_sizes):
            lines.append(f"depth_{depth}={self.depth_sizes[depth]}")
        lines.append(f"exact={flag[self.exact]}")
        lines.append(f"complete={flag[self.complete]}")
        return lines

    def summary(self) -> str:
        """Human-readable multi-line description."""
        kind = "exact" if self.exact else "approximate"
        scope = "complete" if self.complete else "partial"
        total = self.flip_edge_count + self.reduction_edge_count
        lines = [
            f"{scope} {kind} census: {self.vertex_count} vertices, "
            f"{total} edges ({self.flip_edge_count} flips, "
            f"{self.reduction_edge_count} reductions), "
            f"{self.loop_count} loops",
            "levels: "
            + ", ".join(
                f"rank {r}: {c}" for r, c in sorted(self.level_sizes.items())
            ),
            "depths: "
            + ", ".join(
                f"{d}: {c}" for d, c in sorted(self.depth_sizes.items())
            ),
        ]
        return "\n".join(lines)


@dataclass(frozen=True)
class Component:
    """An explored portion of the flip graph, rooted at vertex 0.

    ``vertices`` holds one representative scheme per equivalence class,
    ``depths`` the breadth-first distance of each vertex from the start.
    Flip edges are unordered index pairs (loops kept separately),
    reduction edges are directed (higher rank, lower rank) pairs.
    """

    format: Format
    identity: str
    vertices: tuple[Scheme, ...]
    depths: tuple[int, ...]
    flip_edges: frozenset[tuple[int, int]]
    reduction_edges: frozenset[tuple[int, int]]
    loop_vertices: frozenset[int]
    exact: bool
    complete: bool
    _index: object = field(default=None, repr=False, compare=False)

    @property
    def stats(self) -> ComponentStats:
        return ComponentStats(
            vertex_count=len(self.vertices),
            flip_edge_count=len(self.flip_edges),
            reduction_edge_count=len(self.reduction_edges),
            loop_count=len(self.loop_vertices),
            level_sizes=dict(
                sorted(Counter(v.rank for v in self.vertices).items())
            ),
            depth_sizes=dict(sorted(Counter(self.depths).items())),
            exact=self.exact,
            complete=self.complete,
        )

    def locate(self, s: Scheme) -> int | None:
        """Index of the vertex containing ``s``, if it was explored."""
        if s.format != self.format:
            return None
        if self._index is not None:
            idx, _ = self._index.resolve(s, False)
            return idx
        for i, rep in enumerate(self.vertices):
            if rep.raw() == s.raw() or (
                self.exact and symmetry.equivalent(rep, s)
            ):
                return i
        return None

    def adjacency(self) -> list[list[int]]:
        """Undirected neighbor lists over flip and reduction edges."""
        neighbors: list[set[int]] = [set() for _ in self.vertices]
        for i, j in self.flip_edges:
            neighbors[i].add(j)
            neighbors[j].add(i)
        for i, j in self.reduction_edges:
            neighbors[i].add(j)
            neighbors[j].add(i)
        return [sorted(n) for n in neighbors]


def reduction_preimages(s: Scheme) -> Iterator[Scheme]:
    """Yield every scheme one rank above ``s`` that reduces to it.

    Inverts the reduction construction: pick a shared factor, a subset of
    its carriers, and a fresh third-role factor; the removed pivot is put
    back so that one reduction step recovers ``s`` exactly. Preimages
    whose reduction would also cancel extra elements sit two or more
    ranks higher and are not enumerated here.
    """
    fmt = s.format
    raws = s.raw()
    seen: set[tuple[tuple[int, int, int], ...]] = set()
    for role_one, role_dep in ROLE_PAIRS:
        third = 3 - role_one - role_dep
        third_bits = fmt.role_bits[third]
        groups: dict[int, list[int]] = {}
        for i, raw in enumerate(raws):
            groups.setdefault(raw[role_one], []).append(i)
        for shared, members in groups.items():
            for mask in range(1, 1 << len(members)):
                chosen = [
                    members[b] for b in range(len(members)) if mask >> b & 1
                ]
                pivot_dep = 0
                for i in chosen:
                    pivot_dep ^= raws[i][role_dep]
                if pivot_dep == 0:
                    continue
                blocked = {raws[i][third] for i in chosen}
                kept = [
                    raw for i, raw in enumerate(raws) if i not in chosen
                ]
                for w in range(1, 1 << third_bits):
                    if w in blocked:
                        continue
                    pivot = [0, 0, 0]
                    pivot[role_one] = shared
                    pivot[role_dep] = pivot_dep
                    pivot[third] = w
                    new_raws = list(kept)
                    new_raws.append(tuple(pivot))
                    for i in chosen:
                        moved = list(raws[i])
                        moved[third] ^= w
                        new_raws.append(tuple(moved))
                    key = tuple(sorted(new_raws))
                    if key in seen:
                        continue
                    seen.add(key)
                    yield Scheme.from_raw(fmt, key)


def _neighbor_schemes(
    v: Scheme, allow_up: bool
) -> Iterator[tuple[str, Scheme]]:
    """All graph neighbors of one vertex, tagged by edge direction."""
    for move in enumerate_flips(v):
        yield "flip", apply_flip(v, move)
    for cert in enumerate_reductions(v):
        yield "down", apply_reduction(v, cert)
    if allow_up:
        for pre in reduction_preimages(v):
            yield "up", pre


def _target_matcher(identity: str, target: Scheme | None, orbit_budget: int):
    """Predicate telling whether a vertex representative matches target."""
    if target is None:
        return lambda rep: False
    if identity == "canonical":
        goal = min(symmetry.orbit_raw_forms(target, orbit_budget))
        return lambda rep: rep.raw() == goal
    if identity == "raw":
        goal = target.raw()
        return lambda rep: rep.raw() == goal
    fp = (symmetry.hash_invariant(target), symmetry.pair_profile(target))

    def fingerprint_of(rep: Scheme):
        return (symmetry.hash_invariant(rep), symmetry.pair_profile(rep))

    if identity == "fingerprint":
        return lambda rep: fingerprint_of(rep) == fp
    return lambda rep: fingerprint_of(rep) == fp and symmetry.equivalent(
        rep, target, orbit_budget
    )


def explore_component(
    start: Scheme,
    rank_cap: int | None = None,
    *,
    budget: int = DEFAULT_VERTEX_BUDGET,
    radius: int | None = None,
    identity: str = "auto",
    orbit_budget: int = symmetry.DEFAULT_ORBIT_BUDGET,
    stop_at: Scheme | None = None,
    ascend: bool = True,
) -> Component:
    """Breadth-first census of the component containing ``start``.

    Expands every flip and every reduction, and by default also every
    reduction preimage within ``rank_cap``, so reductions are traversed
    in both directions while being recorded as directed edges;
    ``ascend=False`` restricts traversal to flips and downward
    reductions. ``budget`` caps the number of vertices, ``radius`` the
    expansion depth; hitting either limit (or ``stop_at``) yields a
    partial census with ``complete=False``. Identity modes: ``canonical``
    (orbit closure) and ``pairwise`` (fingerprint bucket plus exact
    equivalence) are exact; ``fingerprint`` merges on invariants only;
    ``raw`` skips the symmetry quotient entirely. ``auto`` picks
    ``canonical`` when the symmetry group is small enough to enumerate,
    else ``pairwise``.
    """
    if identity not in IDENTITY_MODES:
        raise ValueError(f"unknown identity mode {identity!r}")
    if budget < 1:
        raise ValueError("vertex budget must be positive")
    if radius is not None and radius < 0:
        raise ValueError("radius must be non-negative")
    cap = start.rank if rank_cap is None else rank_cap
    if start.rank > cap:
        raise ValueError(f"start rank {start.rank} exceeds cap {cap}")
    if not start.verify():
        raise ValueError("start scheme fails verification")
    if stop_at is not None and stop_at.format != start.format:
        raise ValueError("stop scheme must have the start scheme's format")
    if identity == "auto":
        small = symmetry.orbit_group_order(start.format) <= orbit_budget
        identity = "canonical" if small else "pairwise"
    index = _INDEX_TYPES[identity](start.format, orbit_budget)
    matches = _target_matcher(identity, stop_at, orbit_budget)

    root, _ = index.resolve(start, True)
    depths = [0]
    queue: deque[int] = deque([root])
    flip_edges: set[tuple[int, int]] = set()
    reduction_edges: set[tuple[int, int]] = set()
    loop_vertices: set[int] = set()
    truncated = False
    stopped = matches(index.reps[root])

    while queue and not stopped:
        vi = queue.popleft()
        if radius is not None and depths[vi] >= radius:
            truncated = True
            continue
        v = index.reps[vi]
        allow_up = ascend and v.rank + 1 <= cap
        for kind, neighbor in _neighbor_schemes(v, allow_up):
            ti, is_new = index.resolve(
                neighbor, len(index.reps) < budget
            )
            if ti is None:
                truncated = True
                continue
            if kind == "flip":
                if ti == vi:
                    loop_vertices.add(vi)
                else:
                    flip_edges.add((min(vi, ti), max(vi, ti)))
            elif kind == "down":
                reduction_edges.add((vi, ti))
            else:
                reduction_edges.add((ti, vi))
            if is_new:
                depths.append(depths[vi] + 1)
                queue.append(ti)
                if matches(index.reps[ti]):
                    stopped = True
                    break

    return Component(
        format=start.format,
        identity=identity,
        vertices=tuple(index.reps),
        depths=tuple(depths),
        flip_edges=frozenset(flip_edges),
        reduction_edges=frozenset(reduction_edges),
        loop_vertices=frozenset(loop_vertices),
        exact=index.exact,
        complete=not truncated and not queue,
        _index=index,
    )


def distance(
    s1: Scheme,
    s2: Scheme,
    rank_cap: int | None = None,
    *,
    budget: int = DEFAULT_VERTEX_BUDGET,
    identity: str = "auto",
    orbit_budget: int = symmetry.DEFAULT_ORBIT_BUDGET,
) -> int | None:
    """Shortest hop count between two schemes, or None if not connected.

    Distances are measured in the undirected graph (reductions count one
    hop either way) restricted to ranks at most ``rank_cap``. A partial
    exploration that exhausts its budget without meeting ``s2`` also
    reports None.
    """
    if s1.format != s2.format:
        raise ValueError("schemes of different formats are never connected")
    if s1.raw() == s2.raw():
        return 0
    cap = max(s1.rank, s2.rank) if rank_cap is None else rank_cap
    found = explore_component(
        s1,
        cap,
        budget=budget,
        identity=identity,
        orbit_budget=orbit_budget,
        stop_at=s2,
    )
    idx = found.locate(s2)
    if idx is None:
        return None
    return found.depths[idx]


def shortest_path(component: Component, src: int, dst: int) -> list[int] | None:
    """Vertex index path from src to dst in the undirected graph."""
    n = len(component.vertices)
    if not (0 <= src < n and 0 <= dst < n):
        raise ValueError("vertex index out of range")
    if src == dst:
        return [src]
    adjacency = component.adjacency()
    parent = {src: src}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in adjacency[v]:
            if w in parent:
                continue
            parent[w] = v
            if w == dst:
                path = [w]
                while path[-1] != src:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            queue.append(w)
    return None


def diameter(component: Component) -> int:
    """Largest shortest-path distance over all vertex pairs."""
    if not component.complete:
        raise ValueError("diameter requires a completely explored component")
    adjacency = component.adjacency()
    n = len(component.vertices)
    best = 0
    for source in range(n):
        dist = [-1] * n
        dist[source] = 0
        queue = deque([source])
        reached = 1
        while queue:
            v = queue.popleft()
            for w in adjacency[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    reached += 1
                    queue.append(w)
        if reached != n:
            raise ValueError("component is not connected")
        best = max(best, max(dist))
    return best


def export_dot(
    component: Component,
    *,
    highlight: Sequence[int] | None = None,
    include_loops: bool = False,
    name: str = "flipgraph",
) -> str:
    """Render the component as DOT text.

    Flip edges are plain undirected edges, reduction edges carry an
    arrowhead toward the lower level, vertices are labeled by rank. An
    optional ``highlight`` walk (consecutive vertex indices) is drawn in
    red. Output is deterministic.
    """
    marked: set[tuple[int, int]] = set()
    if highlight:
        n = len(component.vertices)
        for idx in highlight:
            if not 0 <= idx < n:
                raise ValueError("highlight index out of range")
        undirected = set(component.flip_edges)
        for i, j in component.reduction_edges:
            undirected.add((min(i, j), max(i, j)))
        for a, b in zip(highlight, highlight[1:]):
            pair = (min(a, b), max(a, b))
            if pair not in undirected:
                raise ValueError(
                    f"highlight step {a}-{b} is not an edge of the component"
                )
            marked.add(pair)

    lines = [f"graph {name} {{", "  node [shape=circle fontsize=10];"]
    for i, v in enumerate(component.vertices):
        lines.append(f'  v{i} [label="{v.rank}"];')
    for i, j in sorted(component.flip_edges):
        attrs = []
        if (i, j) in marked:
            attrs.append('color="red" penwidth=2')
        suffix = f" [{' '.join(attrs)}]" if attrs else ""
        lines.append(f"  v{i} -- v{j}{suffix};")
    if include_loops:
        for i in sorted(component.loop_vertices):
            lines.append(f"  v{i} -- v{i} [style=dotted];")
    for i, j in sorted(component.reduction_edges):
        attrs = ["dir=forward"]
        if (min(i, j), max(i, j)) in marked:
            attrs.append('color="red" penwidth=2')
        else:
            attrs.append('color="forestgreen"')
        lines.append(f"  v{i} -- v{j} [{' '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
