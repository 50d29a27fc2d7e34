"""Cover most of ``G[V]`` by vertex-disjoint paths on exactly ``m`` vertices.

``V`` is split into ``V_1..V_m`` with every vertex of ``G`` having about
``|V|/n * d / m`` neighbours in each class, a maximum matching ``M_i`` is
taken in each ``G[V_i, V_{i+1}]``, and the components of
``M_1 + ... + M_{m-1}`` that run all the way from ``V_1`` to ``V_m`` are
kept.  Kept paths have their ends in ``V_1`` and ``V_m`` only, so every
vertex has few neighbours among the endvertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph_core import HostGraph
from .matching import hopcroft_karp
from .partitioner import (
    PartitionRequest,
    PreconditionDegree,
    ResampleBudgetExhausted,
    partition,
)

__all__ = ["PartitionFailed", "PathCover", "build_path_cover", "assemble_paths", "chain_matchings"]


class PartitionFailed(RuntimeError):
    def __init__(self, msg: str, cause: Exception | None = None):
        super().__init__(msg)
        self.cause = cause


@dataclass
class PathCover:
    paths: list[tuple[int, ...]]
    m: int
    classes: tuple[np.ndarray, ...] = ()
    stats: dict = field(default_factory=dict)

    @property
    def endvertices(self) -> frozenset[int]:
        return frozenset(v for p in self.paths for v in (p[0], p[-1]))

    @property
    def covered(self) -> int:
        return sum(len(p) for p in self.paths)

    def endvertex_degrees(self, g: HostGraph) -> np.ndarray:
        """``deg(v, X_end)`` for every vertex ``v`` of ``g``."""
        mask = np.zeros(g.n, dtype=np.int32)
        mask[list(self.endvertices)] = 1
        return g.csr @ mask


def chain_matchings(g: HostGraph, classes: Sequence[Sequence[int]]) -> list[dict[int, int]]:
    """Maximum matchings ``M_i`` of ``G[V_i, V_{i+1}]``, each ``V_i -> V_{i+1}``.

    Every ``M_i`` is a maximum matching of its bipartite graph.  Among
    maximum matchings, the vertices of ``V_i`` reached by ``M_{i-1}`` are
    matched first (warm start), so more chains survive to ``V_m``.
    """
    out: list[dict[int, int]] = []
    frontier = set(int(v) for v in classes[0])
    for i in range(len(classes) - 1):
        left = [int(v) for v in classes[i]]
        right = set(int(v) for v in classes[i + 1])
        adj = {u: [w for w in g.adj[u] if w in right] for u in left}
        front = [u for u in left if u in frontier]
        warm = hopcroft_karp(front, adj)
        match = hopcroft_karp(front + [u for u in left if u not in frontier], adj, initial=warm)
        out.append(match)
        frontier = {match[u] for u in front if u in match}
    return out


def assemble_paths(
    matchings: Sequence[dict[int, int] | Sequence[tuple[int, int]]],
    classes: Sequence[Sequence[int]],
    g: HostGraph | None = None,
) -> tuple[list[tuple[int, ...]], int]:
    """Full-length components of the union of the matchings.

    ``matchings[i]`` pairs vertices of ``classes[i]`` with ``classes[i+1]``
    (a dict or a list of pairs, either orientation).  Returns the paths with
    one vertex in each class, in class order, and the number of discarded
    fragments (all other components with at least one edge).
    """
    m = len(classes)
    if m < 1:
        raise ValueError("need at least one class")
    if len(matchings) != m - 1:
        raise ValueError(f"need {m - 1} matchings for {m} classes, got {len(matchings)}")
    which = {}
    for i, cls in enumerate(classes):
        for v in cls:
            which[int(v)] = i
    nxt: list[dict[int, int]] = []
    touched: set[int] = set()
    for i, mt in enumerate(matchings):
        pairs = mt.items() if isinstance(mt, dict) else mt
        step: dict[int, int] = {}
        used_right: set[int] = set()
        for a, b in pairs:
            a, b = int(a), int(b)
            if which.get(a) == i + 1 and which.get(b) == i:
                a, b = b, a
            if which.get(a) != i or which.get(b) != i + 1:
                raise ValueError(f"pair ({a}, {b}) does not join class {i} to class {i + 1}")
            if a in step or b in used_right:
                raise ValueError(f"matching {i} is not a matching at ({a}, {b})")
            if g is not None and not g.has_edge(a, b):
                raise ValueError(f"pair ({a}, {b}) is not an edge")
            step[a] = b
            used_right.add(b)
            touched.update((a, b))
        nxt.append(step)

    paths = []
    for v in sorted(int(x) for x in classes[0]):
        path = [v]
        for i in range(m - 1):
            w = nxt[i].get(path[-1])
            if w is None:
                break
            path.append(w)
        if len(path) == m:
            paths.append(tuple(path))
    # components of the union: count those that are not full paths
    parent = {v: v for v in touched}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step in nxt:
        for a, b in step.items():
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
    components = len({find(v) for v in touched})
    return paths, components - len(paths)


def build_path_cover(
    g: HostGraph,
    V: Sequence[int],
    m: int,
    d: float,
    gamma: float,
    epsilon: float,
    seed=0,
    *,
    size_gamma: float | None = None,
    strict: bool = True,
    partition_kw: dict | None = None,
) -> PathCover:
    """Paths on exactly ``m`` vertices inside ``G[V]``.

    ``d`` is the reference degree of ``g``; the classes are asked for
    ``|V|/n * d / m`` neighbours each, within ``(1 +- 2 gamma)``, and class
    sizes within ``(1 +- size_gamma)`` (default ``epsilon / 4``).

    With ``strict=False`` a failed partition does not raise; the best
    assignment found is used and ``stats["partition_ok"]`` is false.  Missing
    the target path count is reported in ``stats["shortfall"]``.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    V = np.asarray(sorted(set(int(v) for v in V)), dtype=np.int64)
    q = len(V) / g.n
    ref = q * d
    size_gamma = epsilon / 4 if size_gamma is None else size_gamma
    req = PartitionRequest(
        g, V, range(g.n), [1.0 / m] * m, gamma, ref, upper_bound_mode=True, size_gamma=size_gamma
    )
    kw = dict(partition_kw or {})
    stats: dict = {"partition_ok": True, "precondition_ok": True}
    try:
        res = partition(req, seed, **kw)
    except PreconditionDegree as exc:
        if strict:
            raise PartitionFailed(str(exc), exc) from exc
        stats["precondition_ok"] = False
        try:
            res = partition(req, seed, check_precondition=False, **kw)
        except ResampleBudgetExhausted as exc2:
            res = exc2.best
    except ResampleBudgetExhausted as exc:
        if strict:
            raise PartitionFailed(str(exc), exc) from exc
        res = exc.best
    stats["partition_ok"] = stats["partition_ok"] and res.ok
    stats["partition_rounds"] = res.resample_rounds
    stats["partition_slack"] = res.achieved_slack

    matchings = chain_matchings(g, res.classes)
    paths, fragments = assemble_paths(matchings, res.classes)
    t = math.ceil((1 - epsilon) * len(V) / m)
    cover = PathCover(paths, m, res.classes, stats)
    endeg = cover.endvertex_degrees(g)
    stats.update(
        target_paths=t,
        shortfall=max(0, t - len(paths)),
        fragments=fragments,
        matching_sizes=[len(mt) for mt in matchings],
        covered=cover.covered,
        max_endvertex_degree=int(endeg.max()) if g.n else 0,
        endvertex_bound=4 * d / m,
        endvertex_bound_ok=bool(g.n == 0 or endeg.max() <= 4 * d / m + 1e-9),
    )
    return cover
