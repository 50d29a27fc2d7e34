"""Seeded test instances: random regular graphs, named graphs, the lower-bound gadget."""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph_core import HostGraph, PatternGraph, build_graph

__all__ = [
    "InfeasibleDegreeSequence",
    "GenerationTimeout",
    "InvalidDegree",
    "UnknownName",
    "GenSpec",
    "gen_random_regular",
    "gen_lower_bound_gadget",
    "gen_named",
    "named_pattern",
    "generate",
]


class InfeasibleDegreeSequence(ValueError):
    pass


class GenerationTimeout(RuntimeError):
    pass


class InvalidDegree(ValueError):
    pass


class UnknownName(KeyError):
    pass


@dataclass(frozen=True)
class GenSpec:
    kind: str  # "random_regular" | "gadget" | "named"
    n: int = 0
    d: int = 0
    seed: int = 0
    named_id: str = ""

    def __post_init__(self):
        if self.kind == "random_regular":
            if (self.n * self.d) % 2 or self.d >= self.n:
                raise InfeasibleDegreeSequence(f"no simple {self.d}-regular graph on {self.n} vertices")
        elif self.kind == "gadget":
            if self.d < 4 or self.d % 2:
                raise InvalidDegree(f"gadget needs even d >= 4, got {self.d}")
        elif self.kind == "named":
            if not self.named_id:
                raise UnknownName("named graph needs an id")
        else:
            raise ValueError(f"unknown generator kind {self.kind!r}")


def generate(spec: GenSpec) -> HostGraph:
    if spec.kind == "random_regular":
        return gen_random_regular(spec.n, spec.d, spec.seed)
    if spec.kind == "gadget":
        return gen_lower_bound_gadget(spec.d)[0]
    return gen_named(spec.named_id)


# --------------------------------------------------------------------------
# random regular graphs


def gen_random_regular(n: int, d: int, seed: int = 0, *, max_swaps: int | None = None) -> HostGraph:
    """Simple ``d``-regular graph on ``n`` vertices, deterministic in ``seed``.

    Half-edges are paired uniformly (configuration model).  Bad pairs (loops
    and repeated edges) are re-paired together with an equal number of random
    good pairs until a budget of ``100*n*d`` re-paired half-edges is spent;
    anything still bad is then fixed by double-edge swaps.  The swap phase
    introduces a small bias away from uniform.
    """
    if n < 0 or d < 0:
        raise InfeasibleDegreeSequence("negative n or d")
    if (n * d) % 2 or (d >= n and not (n == 0 and d == 0)):
        raise InfeasibleDegreeSequence(f"no simple {d}-regular graph on {n} vertices")
    if d == 0:
        return build_graph(n, [])
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    rng.shuffle(stubs)
    pairs = stubs.reshape(-1, 2)

    budget = 100 * n * d
    spent = 0
    while True:
        bad = _bad_pairs(pairs)
        if not bad.any():
            break
        if spent >= budget:
            pairs = _swap_repair(pairs, rng, max_swaps if max_swaps is not None else 100 * n * d)
            break
        bad_idx = np.flatnonzero(bad)
        good_idx = np.flatnonzero(~bad)
        extra = rng.choice(good_idx, size=min(len(good_idx), len(bad_idx)), replace=False) if len(good_idx) else good_idx
        idx = np.concatenate([bad_idx, extra])
        pool = pairs[idx].ravel()
        rng.shuffle(pool)
        pairs[idx] = pool.reshape(-1, 2)
        spent += len(pool)

    g = build_graph(n, pairs.tolist())
    assert (g.degrees == d).all()
    return g


def _bad_pairs(pairs: np.ndarray) -> np.ndarray:
    """Boolean mask of loops and of every copy but the first of a repeated edge."""
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    bad = lo == hi
    key = lo * (int(hi.max()) + 1) + hi
    _, first = np.unique(key, return_index=True)
    dup = np.ones(len(pairs), dtype=bool)
    dup[first] = False
    return bad | dup


def _swap_repair(pairs: np.ndarray, rng: np.random.Generator, max_swaps: int) -> np.ndarray:
    edges = [tuple(p) for p in pairs.tolist()]
    count: dict[tuple[int, int], int] = {}

    def key(a, b):
        return (a, b) if a < b else (b, a)

    for a, b in edges:
        count[key(a, b)] = count.get(key(a, b), 0) + 1

    def is_bad(i):
        a, b = edges[i]
        return a == b or count[key(a, b)] > 1

    bad = [i for i in range(len(edges)) if is_bad(i)]
    swaps = 0
    while bad:
        i = bad.pop()
        if not is_bad(i):
            continue
        a, b = edges[i]
        j = int(rng.integers(len(edges)))
        c, e = edges[j]
        if rng.random() < 0.5:
            c, e = e, c
        if j == i or len({a, b, c, e}) < 4:
            bad.append(i)
        else:
            new1, new2 = key(a, c), key(b, e)
            if new1 in count or new2 in count:
                bad.append(i)
            else:
                for k in (key(a, b), key(c, e)):
                    count[k] -= 1
                    if not count[k]:
                        del count[k]
                count[new1] = 1
                count[new2] = 1
                edges[i], edges[j] = new1, new2
        swaps += 1
        if swaps > max_swaps:
            raise GenerationTimeout(f"swap repair did not converge within {max_swaps} swaps")
    return np.asarray(edges, dtype=np.int64)


# --------------------------------------------------------------------------
# the lower-bound gadget


def _gadget_block(d: int, block: str) -> tuple[list[tuple[int, int]], int]:
    """Edges of one block on ``d+2`` vertices and the index of its low-degree vertex."""
    k = d + 2
    edges = set(combinations(range(k), 2))
    if block == "matching":
        removed = {(i, i + 1) for i in range(0, k, 2)}
    elif block == "hamilton":
        removed = {(i, i + 1) for i in range(k - 1)} | {(0, k - 1)}
    else:
        raise ValueError(f"unknown block construction {block!r}")
    edges -= removed
    nbrs = {v: set() for v in range(k)}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    # lowest y, then lowest x < z with xy, yz present and xz absent
    for y in range(k):
        for x, z in combinations(sorted(nbrs[y]), 2):
            if z not in nbrs[x]:
                edges -= {(min(x, y), max(x, y)), (min(y, z), max(y, z))}
                edges.add((x, z))
                return sorted(edges), y
    raise InvalidDegree(f"no admissible x, y, z in the block for d={d}")


def gen_lower_bound_gadget(d: int, *, block: str = "matching") -> tuple[HostGraph, tuple[int, int]]:
    """The d-regular graph on ``d(d+2)+2`` vertices with two marked apexes ``u, v``.

    Each of the ``d`` blocks is ``K_{d+2}`` minus a perfect matching, after
    which ``xy, yz`` are swapped for ``xz``; ``u`` and ``v`` are joined to the
    ``y`` of every block.  ``block="hamilton"`` removes a Hamilton cycle
    instead, which leaves the non-``y`` vertices with degree ``d-1``.
    """
    if d < 4 or (block == "matching" and d % 2):
        raise InvalidDegree(f"gadget needs even d >= 4, got {d}")
    block_edges, y = _gadget_block(d, block)
    k = d + 2
    edges = []
    ys = []
    for i in range(d):
        off = i * k
        edges.extend((a + off, b + off) for a, b in block_edges)
        ys.append(y + off)
    u, v = d * k, d * k + 1
    for yi in ys:
        edges.append((u, yi))
        edges.append((v, yi))
    return build_graph(d * k + 2, edges), (u, v)


# --------------------------------------------------------------------------
# named graphs


def gen_named(name: str) -> HostGraph:
    """Catalog lookup.

    ``K<t>`` complete, ``C<k>`` cycle, ``P<k>`` path on k vertices, ``K<a>,<b>``
    complete bipartite (``K33`` style shorthand for single digits a >= 2),
    ``K4-e``, ``petersen``, ``empty<n>``.
    """
    key = name.strip()
    low = key.lower()
    if low == "petersen":
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        return build_graph(10, outer + spokes + inner)
    if low == "k4-e":
        return build_graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])
    m = re.fullmatch(r"k(\d+),(\d+)", low) or re.fullmatch(r"k([2-9])(\d)", low)
    if m:
        a, b = int(m.group(1)), int(m.group(2))
        return build_graph(a + b, [(i, a + j) for i in range(a) for j in range(b)])
    m = re.fullmatch(r"k(\d+)", low)
    if m:
        t = int(m.group(1))
        return build_graph(t, combinations(range(t), 2))
    m = re.fullmatch(r"c(\d+)", low)
    if m and int(m.group(1)) >= 3:
        k = int(m.group(1))
        return build_graph(k, [(i, (i + 1) % k) for i in range(k)])
    m = re.fullmatch(r"p(\d+)", low)
    if m and int(m.group(1)) >= 1:
        k = int(m.group(1))
        return build_graph(k, [(i, i + 1) for i in range(k - 1)])
    m = re.fullmatch(r"empty(\d+)", low)
    if m:
        return build_graph(int(m.group(1)), [])
    raise UnknownName(name)


def named_pattern(name: str) -> PatternGraph:
    """Pattern by id; ``<base>+K1`` (repeatable) appends isolated vertices."""
    base, *extra = name.split("+")
    iso = 0
    for part in extra:
        if part.strip().upper() != "K1":
            raise UnknownName(name)
        iso += 1
    g = gen_named(base)
    if iso:
        g = build_graph(g.n + iso, g.edge_list())
    return PatternGraph(g, name=name)
