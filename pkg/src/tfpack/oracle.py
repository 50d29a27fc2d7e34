"""Ground truth for tiny graphs.

Everything here is brute force and shares no search code with the finder or
the packer: subdivisions are enumerated over all injective branch maps and
all systems of simple paths produced by networkx, and the best packing is
found by branch and bound over vertex sets that carry a spanning subdivision.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import networkx as nx

from .graph_core import (
    HostGraph,
    Packing,
    PatternGraph,
    SubdivisionWitness,
    build_graph,
    validate_packing,
    validate_witness,
)

__all__ = [
    "LimitsExceeded",
    "OracleLimits",
    "OptimalPacking",
    "CrossCheckReport",
    "enumerate_subdivisions",
    "has_subdivision",
    "optimal_packing",
    "cross_check",
    "connected_graphs",
]


class LimitsExceeded(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_n: int = 12
    max_pattern_edges: int = 6
    time_budget: float | None = None  # seconds, checked between branch maps

    def enforce(self, g: HostGraph, F: PatternGraph) -> None:
        if g.n > self.max_n:
            raise LimitsExceeded(f"host has {g.n} vertices, limit {self.max_n}")
        if F.num_edges > self.max_pattern_edges:
            raise LimitsExceeded(f"pattern has {F.num_edges} edges, limit {self.max_pattern_edges}")


def _nx(g: HostGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edge_list())
    return h


def _core(F: PatternGraph) -> PatternGraph:
    if F.isolated_count:
        raise ValueError("pattern has isolated vertices; pass its core")
    return F


def _automorphisms(core: HostGraph) -> list[tuple[int, ...]]:
    edges = core.edges
    out = []
    for perm in itertools.permutations(range(core.n)):
        if all(((perm[a], perm[b]) if perm[a] < perm[b] else (perm[b], perm[a])) in edges for a, b in edges):
            out.append(perm)
    return out


def _iter_subdivisions(g: HostGraph, F: PatternGraph, spanning: bool, deadline: float | None):
    """Yield ``(branch_map, paths)`` for every subdivision of ``F`` in ``g``.

    Branch maps that differ by an automorphism of ``F`` give the same
    subgraphs, so only the lexicographically smallest of each orbit is tried.
    """
    core = F.graph
    fedges = core.edge_list()
    fdeg = [core.degree(x) for x in range(core.n)]
    G = _nx(g)
    gdeg = dict(G.degree())
    k = core.n
    autos = [a for a in _automorphisms(core) if a != tuple(range(k))]
    cands = [[v for v in range(g.n) if gdeg[v] >= fdeg[x]] for x in range(k)]
    spare = g.n - k if spanning else None

    for bmap in itertools.product(*cands):
        if len(set(bmap)) < k:
            continue
        if any(tuple(bmap[a[i]] for i in range(k)) < bmap for a in autos):
            continue
        if deadline is not None and time.monotonic() > deadline:
            raise LimitsExceeded("oracle time budget exceeded")
        yield from _route(G, bmap, fedges, 0, set(bmap), {}, spare)


def _route(G, bmap, fedges, i, used, paths, spare):
    """Extend ``paths`` over ``fedges[i:]``; ``spare`` counts internal vertices still to place."""
    if i == len(fedges):
        if spare is None or spare == 0:
            yield tuple(bmap), dict(paths)
        return
    a, b = fedges[i]
    src, dst = bmap[a], bmap[b]
    sub = G.subgraph([v for v in G if v not in used or v == src or v == dst])
    cutoff = None if spare is None else spare + 1
    for p in nx.all_simple_paths(sub, src, dst, cutoff=cutoff):
        inner = p[1:-1]
        paths[(a, b)] = tuple(p)
        left = None if spare is None else spare - len(inner)
        yield from _route(G, bmap, fedges, i + 1, used | set(inner), paths, left)
        del paths[(a, b)]


def enumerate_subdivisions(
    g: HostGraph,
    F: PatternGraph,
    limits: OracleLimits | None = None,
    *,
    limit: int | None = None,
    spanning: bool = False,
) -> list[SubdivisionWitness]:
    """All ``F``-subdivisions of ``g``, one per distinct (vertex set, edge set).

    ``limit`` stops after that many distinct subdivisions, which turns the
    call into an existence test.  ``spanning`` keeps only subdivisions that
    use every vertex of ``g``.  Output order is deterministic.
    """
    limits = limits or OracleLimits()
    F = _core(F)
    limits.enforce(g, F)
    deadline = time.monotonic() + limits.time_budget if limits.time_budget else None
    seen = set()
    out: list[SubdivisionWitness] = []
    if F.num_edges == 0:
        return out
    for bmap, paths in _iter_subdivisions(g, F, spanning, deadline):
        w = SubdivisionWitness(F, bmap, paths)
        key = (w.vertices(), w.host_edges())
        if key in seen:
            continue
        seen.add(key)
        out.append(w)
        if limit is not None and len(out) >= limit:
            break
    return out


def has_subdivision(g: HostGraph, F: PatternGraph, limits: OracleLimits | None = None) -> bool:
    return bool(enumerate_subdivisions(g, F, limits, limit=1))


# --------------------------------------------------------------------------
# optimal packing


@dataclass
class OptimalPacking:
    packing: Packing
    covered: int
    nodes: int  # size of the exhausted search tree
    feasible_sets: int

    @property
    def coverage(self) -> float:
        return self.packing.coverage_fraction


def _spanning_witness(g: HostGraph, F: PatternGraph, S: tuple[int, ...]) -> SubdivisionWitness | None:
    """A subdivision of ``F`` in ``g[S]`` that uses every vertex of ``S``."""
    index = {v: i for i, v in enumerate(S)}
    sub = build_graph(len(S), [(index[a], index[b]) for a, b in g.edge_list() if a in index and b in index])
    core = F.graph
    # a spanning subdivision has e(F) + |S| - |F| edges, its internal vertices
    # have degree 2, and it has at most as many components as F
    if sub.num_edges < core.num_edges + sub.n - core.n:
        return None
    if sub.n > core.n and int(sub.degrees.min()) < min(2, int(core.degrees.min())):
        return None
    if nx.number_connected_components(_nx(sub)) > nx.number_connected_components(_nx(core)):
        return None
    found = enumerate_subdivisions(sub, F, OracleLimits(max_n=sub.n, max_pattern_edges=F.num_edges), limit=1, spanning=True)
    if not found:
        return None
    w = found[0]
    return SubdivisionWitness(
        F,
        tuple(S[v] for v in w.branch_map),
        {e: tuple(S[v] for v in p) for e, p in w.subdiv_paths.items()},
    )


def optimal_packing(g: HostGraph, F: PatternGraph, limits: OracleLimits | None = None) -> OptimalPacking:
    """Packing covering the most vertices, by exhaustive branch and bound.

    A packing only needs, for each member, a vertex set that carries a
    spanning subdivision, so the search runs over such sets.  Isolated
    vertices of ``F`` are filled in from uncovered vertices at the end.
    The bound is the number of vertices not yet decided.
    """
    limits = limits or OracleLimits()
    core = F.core_pattern()
    limits.enforce(g, core)
    iso = F.isolated_count
    n = g.n
    if core.num_edges == 0:
        groups = n // F.order if F.order else 0
        ws = [SubdivisionWitness(F, (), {}, tuple(range(i * F.order, (i + 1) * F.order))) for i in range(groups)]
        return OptimalPacking(Packing(n, ws), groups * F.order, 0, 0)

    deadline = time.monotonic() + limits.time_budget if limits.time_budget else None

    def tick():
        if deadline is not None and time.monotonic() > deadline:
            raise LimitsExceeded(f"time budget of {limits.time_budget}s exceeded")

    feasible: dict[int, list[tuple[frozenset, SubdivisionWitness]]] = {v: [] for v in range(n)}
    count = 0
    for size in range(core.order, n + 1):
        for S in itertools.combinations(range(n), size):
            tick()
            w = _spanning_witness(g, core, S)
            if w is not None:
                count += 1
                fs = frozenset(S)
                for v in S:
                    feasible[v].append((fs, w))

    best = {"cover": 0, "choice": []}
    nodes = 0
    h = core.order

    def search(v: int, taken: frozenset, choice: list, covered: int):
        nonlocal nodes
        nodes += 1
        tick()
        while v < n and v in taken:
            v += 1
        cur = covered if iso == 0 else _attach_count(choice, n, iso)
        if cur > best["cover"]:
            best["cover"] = cur
            best["choice"] = list(choice)
        if v >= n:
            return
        undecided = sum(1 for u in range(v, n) if u not in taken)
        bound = covered + undecided + iso * (len(choice) + undecided // h)
        if min(bound, n) <= best["cover"]:
            return
        for fs, w in feasible[v]:
            if fs & taken:
                continue
            choice.append((fs, w))
            search(v + 1, taken | fs, choice, covered + len(fs))
            choice.pop()
        search(v + 1, taken, choice, covered)

    search(0, frozenset(), [], 0)
    choice = best["choice"]
    taken = set().union(*[fs for fs, _ in choice]) if choice else set()
    free = iter(u for u in range(n) if u not in taken)
    ws = []
    if iso and len(choice) * iso > n - len(taken):
        choice = sorted(choice, key=lambda c: -len(c[0]))[: (n - len(taken)) // iso]
    for _, w in choice:
        extra = tuple(next(free) for _ in range(iso))
        ws.append(SubdivisionWitness(F, w.branch_map, w.subdiv_paths, extra))
    packing = Packing(n, ws)
    report = validate_packing(g, packing)
    assert report.valid, report.reasons
    return OptimalPacking(packing, len(packing.covered), nodes, count)


def _attach_count(choice, n: int, iso: int) -> int:
    """Covered count after attaching ``iso`` spare vertices to as many members as fit."""
    used = sum(len(fs) for fs, _ in choice)
    spare = n - used
    keep = min(len(choice), spare // iso)
    sizes = sorted((len(fs) for fs, _ in choice), reverse=True)
    return sum(sizes[:keep]) + keep * iso


# --------------------------------------------------------------------------
# cross checks


@dataclass
class CrossCheckReport:
    finder_agrees: bool
    packer_within_optimum: bool
    packer_witnesses_enumerable: bool
    oracle_exists: bool
    finder_exists: bool
    oracle_coverage: float
    packer_coverage: float
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.finder_agrees and self.packer_within_optimum and self.packer_witnesses_enumerable


def witness_enumerable(g: HostGraph, w: SubdivisionWitness) -> bool:
    """Whether ``w``'s vertex and edge set shows up in the enumeration of its own subgraph."""
    core = w.pattern.core_pattern()
    verts = sorted(set(w.branch_map) | set(w.internal_vertices()))
    index = {v: i for i, v in enumerate(verts)}
    edges = w.host_edges()
    sub = build_graph(len(verts), [(index[a], index[b]) for a, b in edges])
    target = (frozenset(range(len(verts))), frozenset((index[a], index[b]) if index[a] < index[b] else (index[b], index[a]) for a, b in edges))
    lim = OracleLimits(max_n=max(len(verts), 1), max_pattern_edges=core.num_edges)
    for x in enumerate_subdivisions(sub, core, lim, spanning=True):
        if (x.vertices(), x.host_edges()) == target:
            return validate_witness(g, w).ok
    return False


def cross_check(g: HostGraph, F: PatternGraph, limits: OracleLimits | None = None, *, packer_cfg=None) -> CrossCheckReport:
    """Compare the finder and the packer against the oracle on one small graph."""
    from .finder import FinderBudget, find_subdivision
    from .packer import PackerConfig, pack_full

    limits = limits or OracleLimits()
    core = F.core_pattern()
    notes = []
    if core.num_edges:
        oracle_exists = has_subdivision(g, core, limits)
        found = find_subdivision(g, core, FinderBudget(node_budget=10**7, strategy="exhaustive"))
        finder_exists = bool(found)
    else:
        oracle_exists = finder_exists = g.n >= F.order
    opt = optimal_packing(g, F, limits)
    packing = pack_full(g, F, packer_cfg or PackerConfig())
    pcov = packing.coverage_fraction
    enumerable = all(witness_enumerable(g, w) for w in packing.witnesses) if core.num_edges else True
    if not enumerable:
        notes.append("a packer witness is not an enumerable subdivision")
    return CrossCheckReport(
        finder_agrees=oracle_exists == finder_exists,
        packer_within_optimum=len(packing.covered) <= opt.covered,
        packer_witnesses_enumerable=enumerable,
        oracle_exists=oracle_exists,
        finder_exists=finder_exists,
        oracle_coverage=opt.coverage,
        packer_coverage=pcov,
        notes=notes,
    )


# --------------------------------------------------------------------------
# small graph catalogue


def connected_graphs(n: int) -> list[HostGraph]:
    """All connected graphs on ``n`` vertices up to isomorphism (``n <= 8``).

    Orders up to 7 come from the networkx graph atlas.  Order 8 is built by
    joining a new vertex to every nonempty subset of every connected graph
    on 7 vertices (every connected graph has a vertex whose removal keeps it
    connected) and discarding isomorphic copies.
    """
    if n < 1 or n > 8:
        raise ValueError("supported orders are 1..8")
    if n <= 7:
        out = []
        for h in nx.graph_atlas_g():
            if h.number_of_nodes() == n and (n == 1 or nx.is_connected(h)):
                out.append(build_graph(n, h.edges()))
        return out
    base = connected_graphs(7)
    buckets: dict[str, list[nx.Graph]] = {}
    out = []
    for g7 in base:
        edges7 = g7.edge_list()
        for r in range(1, 8):
            for nbrs in itertools.combinations(range(7), r):
                h = nx.Graph()
                h.add_nodes_from(range(8))
                h.add_edges_from(edges7)
                h.add_edges_from((7, u) for u in nbrs)
                key = nx.weisfeiler_lehman_graph_hash(h, iterations=3)
                bucket = buckets.setdefault(key, [])
                if any(nx.is_isomorphic(h, o) for o in bucket):
                    continue
                bucket.append(h)
                out.append(build_graph(8, h.edges()))
    return out
