"""Search for a subdivision of a pattern inside a host graph.

Two strategies share one entry point.  ``exhaustive`` is a complete
backtracking search over branch placements and systems of internally
disjoint paths, so a negative answer within budget is a certificate of
absence.  ``dense_greedy`` is meant for graphs well above the density at
which subdivisions are guaranteed: branch vertices are placed greedily from
high-degree vertices and every pattern edge is routed by a shortest path in
what is left of the graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .graph_core import HostGraph, PatternGraph, SubdivisionWitness, induced_subgraph, validate_witness

__all__ = [
    "BudgetExhausted",
    "PartsTooSmall",
    "FinderBudget",
    "NotFound",
    "find_subdivision",
    "find_in_complete_bipartite",
    "mader_threshold_check",
    "default_density_threshold",
]

STRATEGIES = ("exhaustive", "dense_greedy", "auto")
AUTO_EXHAUSTIVE_MAX_N = 12


class BudgetExhausted(RuntimeError):
    def __init__(self, msg: str, nodes: int):
        super().__init__(msg)
        self.nodes = nodes


class PartsTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class FinderBudget:
    node_budget: int = 200_000
    strategy: str = "auto"
    # candidates tried per branch vertex in the greedy strategy
    greedy_width: int = 8

    def __post_init__(self):
        if self.node_budget < 1:
            raise ValueError("node_budget must be at least 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.greedy_width < 1:
            raise ValueError("greedy_width must be at least 1")


@dataclass(frozen=True)
class NotFound:
    """No witness found.  ``certified`` means none exists."""

    certified: bool
    nodes: int = 0
    reason: str = ""

    def __bool__(self) -> bool:
        return False


def default_density_threshold(F: PatternGraph) -> float:
    """Average degree above which the greedy search is expected to succeed."""
    return 8.0 * F.num_edges


def mader_threshold_check(Lg: HostGraph, threshold: float) -> bool:
    """True iff the average degree of ``Lg`` is at least ``threshold``."""
    if Lg.n == 0:
        return False
    return 2 * Lg.num_edges >= threshold * Lg.n


class _Counter:
    __slots__ = ("nodes", "budget")

    def __init__(self, budget: int):
        self.nodes = 0
        self.budget = budget

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExhausted(f"search exceeded {self.budget} nodes", self.nodes)


def _pattern_order(core: HostGraph) -> list[int]:
    """Vertices of the pattern so that each one (per component) follows a neighbour.

    Components are taken in order of their highest-degree vertex, and inside
    a component the next vertex is the one with most already-placed
    neighbours, then highest degree.
    """
    order: list[int] = []
    placed: set[int] = set()
    remaining = set(range(core.n))
    while remaining:
        start = min(remaining, key=lambda v: (-core.degree(v), v))
        order.append(start)
        placed.add(start)
        remaining.discard(start)
        while True:
            frontier = [v for v in remaining if any(u in placed for u in core.adj[v])]
            if not frontier:
                break
            nxt = min(
                frontier,
                key=lambda v: (-sum(u in placed for u in core.adj[v]), -core.degree(v), v),
            )
            order.append(nxt)
            placed.add(nxt)
            remaining.discard(nxt)
    return order


def _check(F: PatternGraph) -> HostGraph:
    core = F.graph
    if F.isolated_count:
        raise ValueError("pattern has isolated vertices; pass its core")
    if core.num_edges == 0:
        raise ValueError("pattern has no edges")
    return core


def _key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _make_witness(F: PatternGraph, found: dict) -> SubdivisionWitness:
    bmap, paths = found["bmap"], found["paths"]
    return SubdivisionWitness(
        F,
        tuple(bmap[i] for i in range(F.graph.n)),
        {e: tuple(p) for e, p in sorted(paths.items())},
    )


def _relabel(found: dict, ids: Sequence[int]) -> dict:
    return {
        "bmap": {x: ids[v] for x, v in found["bmap"].items()},
        "paths": {e: [ids[v] for v in p] for e, p in found["paths"].items()},
    }


# --------------------------------------------------------------------------
# exhaustive search


def _exhaustive(g: HostGraph, F: PatternGraph, counter: _Counter) -> dict | None:
    core = F.graph
    order = _pattern_order(core)
    pos = {x: i for i, x in enumerate(order)}
    # pattern edges routed when their later endpoint is placed
    back_edges = [[y for y in core.adj[x] if pos[y] < pos[x]] for x in order]
    fdeg = [core.degree(x) for x in range(core.n)]
    adj = g.adj

    bmap: dict[int, int] = {}
    image: dict[int, int] = {}  # host vertex -> pattern vertex
    used: set[int] = set()  # branch vertices and path internals
    paths: dict[tuple[int, int], list[int]] = {}
    pending = [fdeg[x] for x in range(core.n)]  # unrouted edges per pattern vertex

    def capacity_ok() -> bool:
        # every placed branch vertex needs a usable neighbour per unrouted edge
        for x, v in bmap.items():
            need = pending[x]
            if not need:
                continue
            have = 0
            for w in adj[v]:
                if w not in used or (w in image and image[w] in core.adj[x] and _key(x, image[w]) not in paths):
                    have += 1
                    if have >= need:
                        break
            if have < need:
                return False
        return True

    def route_paths(src: int, dst: int):
        """All paths src..dst whose internal vertices are unused."""
        stack = [(src, iter(adj[src]))]
        path = [src]
        onpath = {src}
        while stack:
            u, it = stack[-1]
            for w in it:
                counter.tick()
                if w == dst:
                    yield path + [dst]
                    continue
                if w in used or w in onpath:
                    continue
                path.append(w)
                onpath.add(w)
                stack.append((w, iter(adj[w])))
                break
            else:
                stack.pop()
                onpath.discard(path.pop())

    def route_all(x: int, k: int) -> bool:
        ys = back_edges[pos[x]]
        if k == len(ys):
            return place(pos[x] + 1)
        y = ys[k]
        src, dst = bmap[y], bmap[x]
        key = (min(x, y), max(x, y))
        for p in route_paths(src, dst):
            inner = p[1:-1]
            used.update(inner)
            paths[key] = p if y < x else p[::-1]
            pending[x] -= 1
            pending[y] -= 1
            if capacity_ok() and route_all(x, k + 1):
                return True
            pending[x] += 1
            pending[y] += 1
            del paths[key]
            used.difference_update(inner)
        return False

    def place(i: int) -> bool:
        if i == len(order):
            return True
        x = order[i]
        for v in range(g.n):
            if v in used or len(adj[v]) < fdeg[x]:
                continue
            counter.tick()
            bmap[x] = v
            image[v] = x
            used.add(v)
            if capacity_ok() and route_all(x, 0):
                return True
            used.discard(v)
            del image[v]
            del bmap[x]
        return False

    if place(0):
        return {"bmap": dict(bmap), "paths": dict(paths)}
    return None


# --------------------------------------------------------------------------
# greedy search for dense graphs


def _bfs_route(adj, src: int, dst: int, blocked: set[int], counter: _Counter) -> list[int] | None:
    """Shortest src..dst path whose internal vertices avoid ``blocked``."""
    if dst in adj[src]:
        return [src, dst]
    prev = {src: src}
    q = deque([src])
    while q:
        u = q.popleft()
        counter.tick()
        for w in adj[u]:
            if w in prev:
                continue
            if w == dst:
                path = [dst, u]
                while path[-1] != src:
                    path.append(prev[path[-1]])
                return path[::-1]
            if w in blocked:
                continue
            prev[w] = u
            q.append(w)
    return None


def _distances(adj, sources: Sequence[int], blocked: set[int], limit: int) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    q = deque(sources)
    while q:
        u = q.popleft()
        if dist[u] >= limit:
            continue
        for w in adj[u]:
            if w not in dist and w not in blocked:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def _greedy(g: HostGraph, F: PatternGraph, counter: _Counter, width: int) -> dict | None:
    core = F.graph
    order = _pattern_order(core)
    pos = {x: i for i, x in enumerate(order)}
    back_edges = [[y for y in core.adj[x] if pos[y] < pos[x]] for x in order]
    fdeg = [core.degree(x) for x in range(core.n)]
    adj = g.adj
    deg = [len(a) for a in adj]
    by_degree = sorted(range(g.n), key=lambda v: (-deg[v], v))

    bmap: dict[int, int] = {}
    used: set[int] = set()
    paths: dict[tuple[int, int], list[int]] = {}

    def candidates(x: int) -> list[int]:
        ys = back_edges[pos[x]]
        if not ys:
            return [v for v in by_degree if v not in used and deg[v] >= fdeg[x]][:width]
        # nearest to the placed neighbours first, then by degree, then id
        dists = [_distances(adj, [bmap[y]], used, limit=g.n) for y in ys]
        pool = [v for v in dists[0] if v not in used and deg[v] >= fdeg[x] and all(v in d for d in dists)]
        pool.sort(key=lambda v: (max(d[v] for d in dists), -deg[v], v))
        return pool[:width]

    def place(i: int) -> bool:
        if i == len(order):
            return True
        x = order[i]
        for v in candidates(x):
            counter.tick()
            bmap[x] = v
            used.add(v)
            routed = []
            ok = True
            for y in back_edges[pos[x]]:
                p = _bfs_route(adj, bmap[y], v, used, counter)
                if p is None:
                    ok = False
                    break
                key = (min(x, y), max(x, y))
                paths[key] = p if y < x else p[::-1]
                used.update(p[1:-1])
                routed.append((key, p[1:-1]))
            if ok and place(i + 1):
                return True
            for key, inner in routed:
                del paths[key]
                used.difference_update(inner)
            used.discard(v)
            del bmap[x]
        return False

    if place(0):
        return {"bmap": dict(bmap), "paths": dict(paths)}
    return None


def _peel(g: HostGraph, k: int) -> tuple[HostGraph, list[int]]:
    """The ``k``-core of ``g`` and the original ids of its vertices."""
    deg = [len(a) for a in g.adj]
    gone = [False] * g.n
    stack = [v for v in range(g.n) if deg[v] < k]
    for v in stack:
        gone[v] = True
    while stack:
        v = stack.pop()
        for w in g.adj[v]:
            if not gone[w]:
                deg[w] -= 1
                if deg[w] < k:
                    gone[w] = True
                    stack.append(w)
    if not any(gone):
        return g, list(range(g.n))
    return induced_subgraph(g, [v for v in range(g.n) if not gone[v]])


def _dense_core(g: HostGraph) -> tuple[HostGraph, list[int]]:
    """Repeatedly strip vertices of degree below half the current average."""
    keep = list(range(g.n))
    sub, ids = g, keep
    while sub.n:
        avg = sub.average_degree()
        low = [v for v in range(sub.n) if sub.degree(v) < avg / 2]
        if not low:
            break
        low_set = set(low)
        sub2, local = induced_subgraph(sub, [v for v in range(sub.n) if v not in low_set])
        ids = [ids[v] for v in local]
        sub = sub2
    return sub, ids


# --------------------------------------------------------------------------
# public entry points


def find_subdivision(
    Lg: HostGraph, F: PatternGraph, budget: FinderBudget | None = None
) -> SubdivisionWitness | NotFound:
    """A witness for an ``F``-subdivision in ``Lg``, or ``NotFound``.

    ``F`` must have no isolated vertices.  With the exhaustive strategy a
    ``NotFound`` is certified; the greedy strategy may miss witnesses.
    Raises ``BudgetExhausted`` when the node budget runs out.
    """
    budget = budget or FinderBudget()
    _check(F)
    strategy = budget.strategy
    if strategy == "auto":
        strategy = "exhaustive" if Lg.n <= AUTO_EXHAUSTIVE_MAX_N else "dense_greedy"
    counter = _Counter(budget.node_budget)

    if Lg.n < F.graph.n or Lg.num_edges < F.graph.num_edges:
        return NotFound(True, 0, "host smaller than pattern")
    # internal vertices have degree 2 and branch vertices at least their
    # pattern degree, so the search can be confined to a core of the host
    host, ids = _peel(Lg, min(2, int(F.graph.degrees.min())))
    if host.n < F.graph.n:
        return NotFound(True, 0, "core smaller than pattern")

    if strategy == "exhaustive":
        found = _exhaustive(host, F, counter)
        if found is None:
            return NotFound(True, counter.nodes, "exhausted")
    else:
        found = _greedy(host, F, counter, budget.greedy_width)
        if found is None:
            sub, sub_ids = _dense_core(host)
            if 0 < sub.n < host.n:
                found = _greedy(sub, F, counter, budget.greedy_width)
                if found is not None:
                    found = _relabel(found, sub_ids)
        if found is None:
            return NotFound(False, counter.nodes, "greedy search failed")
    w = _make_witness(F, _relabel(found, ids) if host is not Lg else found)
    check = validate_witness(Lg, w)
    assert check.ok, f"finder produced an invalid witness: {check.reasons}"
    return w


def find_in_complete_bipartite(
    A_x: Sequence[int], A_y: Sequence[int], F: PatternGraph, g: HostGraph | None = None
) -> SubdivisionWitness:
    """Witness inside a complete bipartite graph with parts ``A_x``, ``A_y``.

    Branch vertices are the smallest ids of ``A_x``; every pattern edge is
    routed through its own vertex of ``A_y``.  No search is done.  When ``g``
    is given the result is validated against it.
    """
    core = _check(F)
    need = F.order**2
    if len(A_x) < need or len(A_y) < need:
        raise PartsTooSmall(f"parts of size {len(A_x)} and {len(A_y)}, need {need} each")
    if set(A_x) & set(A_y):
        raise ValueError("parts must be disjoint")
    xs = sorted(A_x)[: core.n]
    ys = iter(sorted(A_y))
    paths = {}
    for a, b in core.edge_list():
        paths[(a, b)] = (xs[a], next(ys), xs[b])
    w = SubdivisionWitness(F, tuple(xs), paths)
    if g is not None:
        check = validate_witness(g, w)
        assert check.ok, f"complete bipartite construction failed: {check.reasons}"
    return w
