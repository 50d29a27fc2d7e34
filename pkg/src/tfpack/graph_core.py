"""Graph representations, the subdivision witness model and witness validation.

Vertices are dense integer ids ``0..n-1``.  Adjacency lists are kept sorted so
that every traversal in the package is reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GraphError",
    "SelfLoop",
    "DuplicateEdge",
    "VertexOutOfRange",
    "GraphFormatError",
    "HostGraph",
    "PatternGraph",
    "SubdivisionWitness",
    "Packing",
    "WitnessCheck",
    "PackingReport",
    "build_graph",
    "induced_subgraph",
    "validate_witness",
    "validate_packing",
    "read_edge_list",
    "write_edge_list",
    "format_edge_list",
    "packing_to_dict",
    "packing_from_dict",
    "dump_packing",
    "load_packing",
    "witness_to_dict",
    "witness_from_dict",
]


class GraphError(ValueError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class VertexOutOfRange(GraphError):
    pass


class GraphFormatError(OSError):
    """Malformed edge-list file; the message names the file and line."""


class HostGraph:
    """Immutable simple undirected graph on ``range(n)``.

    Use :func:`build_graph` to construct one from an edge list.
    """

    def __init__(self, n: int, adj: tuple[tuple[int, ...], ...]):
        self.n = n
        self.adj = adj
        self._nbr_sets = None

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.fromiter((len(a) for a in self.adj), dtype=np.int64, count=self.n)
        deg.setflags(write=False)
        return deg

    @cached_property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((u, v) for u in range(self.n) for v in self.adj[u] if u < v)

    @property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def edge_list(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adj[v]

    def nbr_set(self, v: int) -> frozenset[int]:
        if self._nbr_sets is None:
            self._nbr_sets = [frozenset(a) for a in self.adj]
        return self._nbr_sets[v]

    def has_edge(self, u: int, v: int) -> bool:
        return 0 <= u < self.n and v in self.nbr_set(u)

    def average_degree(self) -> float:
        return 2.0 * self.num_edges / self.n if self.n else 0.0

    def degree_into(self, v: int, vertex_set) -> int:
        return sum(1 for u in self.adj[v] if u in vertex_set)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """0/1 adjacency matrix in CSR form."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=indptr[1:])
        if self.n:
            indices = np.fromiter(
                (v for a in self.adj for v in a), dtype=np.int64, count=int(indptr[-1])
            )
        else:
            indices = np.zeros(0, dtype=np.int64)
        data = np.ones(len(indices), dtype=np.int32)
        return sp.csr_matrix((data, indices, indptr), shape=(self.n, self.n))

    def __eq__(self, other) -> bool:
        return isinstance(other, HostGraph) and self.n == other.n and self.adj == other.adj

    def __hash__(self) -> int:
        return hash((self.n, self.adj))

    def __repr__(self) -> str:
        return f"HostGraph(n={self.n}, m={self.num_edges})"


def build_graph(n: int, edge_list: Iterable[Sequence[int]]) -> HostGraph:
    """Canonical :class:`HostGraph` from an edge list.

    Raises :class:`SelfLoop`, :class:`DuplicateEdge` or
    :class:`VertexOutOfRange`; duplicates are detected regardless of the
    orientation in which a pair is given.
    """
    n = int(n)
    if n < 0:
        raise GraphError(f"negative vertex count {n}")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for pair in edge_list:
        u, v = int(pair[0]), int(pair[1])
        if not (0 <= u < n and 0 <= v < n):
            raise VertexOutOfRange(f"edge ({u}, {v}) outside [0, {n})")
        if u == v:
            raise SelfLoop(f"self-loop at {u}")
        if v in nbrs[u]:
            raise DuplicateEdge(f"duplicate edge ({u}, {v})")
        nbrs[u].add(v)
        nbrs[v].add(u)
    return HostGraph(n, tuple(tuple(sorted(s)) for s in nbrs))


def induced_subgraph(g: HostGraph, vertices: Iterable[int]) -> tuple[HostGraph, list[int]]:
    """Induced subgraph relabelled to ``0..k-1``; also returns the new-to-old map."""
    old = sorted(set(vertices))
    index = {v: i for i, v in enumerate(old)}
    adj = tuple(tuple(index[u] for u in g.adj[v] if u in index) for v in old)
    return HostGraph(len(old), adj), old


# --------------------------------------------------------------------------
# patterns


@dataclass(frozen=True, eq=False)
class PatternGraph:
    """The pattern ``F`` together with its isolated-vertex-free core ``H``.

    ``core`` is relabelled to ``0..|H|-1``; ``core_vertices[i]`` is the vertex
    of ``graph`` that core vertex ``i`` came from.
    """

    graph: HostGraph
    name: str = "custom"

    @cached_property
    def core_vertices(self) -> tuple[int, ...]:
        return tuple(v for v in range(self.graph.n) if self.graph.degree(v) > 0)

    @cached_property
    def core(self) -> HostGraph:
        return induced_subgraph(self.graph, self.core_vertices)[0]

    @property
    def isolated_count(self) -> int:
        return self.graph.n - len(self.core_vertices)

    @property
    def order(self) -> int:
        return self.graph.n

    @property
    def num_edges(self) -> int:
        return self.graph.num_edges

    def core_pattern(self) -> "PatternGraph":
        """The core as a pattern in its own right (no isolated vertices)."""
        if self.isolated_count == 0:
            return self
        return PatternGraph(self.core, name=f"core({self.name})")

    def core_edges(self) -> list[tuple[int, int]]:
        return self.core.edge_list()

    def __eq__(self, other) -> bool:
        return isinstance(other, PatternGraph) and self.graph == other.graph

    def __hash__(self) -> int:
        return hash(self.graph)

    def __repr__(self) -> str:
        return f"PatternGraph({self.name!r}, n={self.graph.n}, m={self.graph.num_edges})"


# --------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class SubdivisionWitness:
    """Certificate that a subgraph of a host graph is a subdivision of a pattern.

    ``branch_map[i]`` is the host vertex of core vertex ``i``.  ``subdiv_paths``
    maps each core edge ``(a, b)`` with ``a < b`` to a host vertex sequence
    running from ``branch_map[a]`` to ``branch_map[b]``.
    """

    pattern: PatternGraph
    branch_map: tuple[int, ...]
    subdiv_paths: Mapping[tuple[int, int], tuple[int, ...]]
    iso_vertices: tuple[int, ...] = ()

    def internal_vertices(self) -> list[int]:
        return [v for path in self.subdiv_paths.values() for v in path[1:-1]]

    def vertices(self) -> frozenset[int]:
        vs = set(self.branch_map)
        vs.update(self.internal_vertices())
        vs.update(self.iso_vertices)
        return frozenset(vs)

    @property
    def size(self) -> int:
        return (
            len(self.branch_map)
            + sum(len(p) - 2 for p in self.subdiv_paths.values())
            + len(self.iso_vertices)
        )

    def host_edges(self) -> frozenset[tuple[int, int]]:
        out = set()
        for path in self.subdiv_paths.values():
            for a, b in zip(path, path[1:]):
                out.add((a, b) if a < b else (b, a))
        return frozenset(out)

    def with_iso_vertices(self, iso: Sequence[int]) -> "SubdivisionWitness":
        return SubdivisionWitness(self.pattern, self.branch_map, self.subdiv_paths, tuple(iso))


@dataclass
class WitnessCheck:
    ok: bool
    reasons: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_witness(g: HostGraph, w: SubdivisionWitness) -> WitnessCheck:
    """Check every witness invariant against ``g``.

    Never raises; failures are reported as reason codes.
    """
    reasons: list[str] = []

    def fail(code: str) -> None:
        if code not in reasons:
            reasons.append(code)

    pattern = w.pattern
    core = pattern.core
    bmap = w.branch_map
    if len(bmap) != core.n:
        fail("BranchMapSize")
        return WitnessCheck(False, reasons)
    for v in list(bmap) + list(w.iso_vertices):
        if not (0 <= v < g.n):
            fail("VertexOutOfRange")
    for path in w.subdiv_paths.values():
        for v in path:
            if not (0 <= v < g.n):
                fail("VertexOutOfRange")
    if reasons:
        return WitnessCheck(False, reasons)
    if len(set(bmap)) != len(bmap):
        fail("BranchNotInjective")

    core_edges = set(core.edges)
    given = set()
    for key in w.subdiv_paths:
        a, b = key
        given.add((a, b) if a < b else (b, a))
    if given != core_edges or len(w.subdiv_paths) != len(core_edges):
        fail("EdgeSetMismatch")

    branch_set = set(bmap)
    seen_internal: set[int] = set()
    for (a, b), path in w.subdiv_paths.items():
        if len(path) < 2:
            fail("PathTooShort")
            continue
        ends = {path[0], path[-1]}
        if not (0 <= a < core.n and 0 <= b < core.n) or ends != {bmap[a], bmap[b]} or path[0] == path[-1]:
            fail("PathEndpointMismatch")
        for x, y in zip(path, path[1:]):
            if not g.has_edge(x, y):
                fail("NonAdjacentStep")
                break
        if len(set(path)) != len(path):
            fail("RepeatedVertexInPath")
        for v in path[1:-1]:
            if v in branch_set:
                fail("InternalHitsBranch")
            if v in seen_internal:
                fail("InternalOverlap")
            seen_internal.add(v)

    iso = w.iso_vertices
    if len(iso) != pattern.isolated_count:
        fail("IsoCountMismatch")
    if len(set(iso)) != len(iso) or set(iso) & (branch_set | seen_internal):
        fail("IsoOverlap")
    return WitnessCheck(not reasons, reasons)


# --------------------------------------------------------------------------
# packings


@dataclass
class Packing:
    n: int
    witnesses: list[SubdivisionWitness] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    # pipeline state kept for independent re-checks; never serialized
    trace: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def covered(self) -> frozenset[int]:
        out: set[int] = set()
        for w in self.witnesses:
            out |= w.vertices()
        return frozenset(out)

    @property
    def coverage_fraction(self) -> float:
        return len(self.covered) / self.n if self.n else 0.0


@dataclass
class PackingReport:
    valid: bool
    coverage: float
    reasons: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


def validate_packing(g: HostGraph, packing: Packing) -> PackingReport:
    reasons: list[str] = []
    seen: set[int] = set()
    total = 0
    for k, w in enumerate(packing.witnesses):
        check = validate_witness(g, w)
        if not check.ok:
            reasons.extend(f"witness[{k}]:{r}" for r in check.reasons)
        vs = w.vertices()
        if seen & vs:
            if "WitnessOverlap" not in reasons:
                reasons.append("WitnessOverlap")
        seen |= vs
        total += len(vs)
    if packing.n != g.n:
        reasons.append("VertexCountMismatch")
    coverage = len(seen) / g.n if g.n else 0.0
    return PackingReport(not reasons, coverage, reasons)


# --------------------------------------------------------------------------
# edge-list text format


def format_edge_list(g: HostGraph) -> str:
    lines = [f"{g.n} {g.num_edges}"]
    lines.extend(f"{u} {v}" for u, v in g.edge_list())
    return "\n".join(lines) + "\n"


def write_edge_list(g: HostGraph, path) -> None:
    Path(path).write_text(format_edge_list(g), newline="\n")


def read_edge_list(path) -> HostGraph:
    """Parse the ``n m`` header + ``u v`` lines format."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    lines = text.split("\n")
    rows = [(i + 1, ln.split()) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        raise GraphFormatError(f"{path}:1: missing header line 'n m'")
    lineno, head = rows[0]
    try:
        n, m = (int(x) for x in head)
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: expected header 'n m', got {' '.join(head)!r}")
    edges = []
    seen = set()
    for lineno, parts in rows[1:]:
        if len(parts) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected 'u v', got {' '.join(parts)!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: non-integer vertex id in {' '.join(parts)!r}")
        key = (min(u, v), max(u, v))
        if u == v:
            raise GraphFormatError(f"{path}:{lineno}: self-loop at {u}")
        if not (0 <= key[0] and key[1] < n):
            raise GraphFormatError(f"{path}:{lineno}: vertex out of range 0..{n - 1}")
        if key in seen:
            raise GraphFormatError(f"{path}:{lineno}: duplicate edge {key}")
        seen.add(key)
        edges.append((u, v))
    if len(edges) != m:
        raise GraphFormatError(f"{path}:{lineno}: header declares {m} edges, found {len(edges)}")
    try:
        return build_graph(n, edges)
    except GraphError as exc:
        raise GraphFormatError(f"{path}: {exc}") from exc


# --------------------------------------------------------------------------
# JSON serialization


def pattern_to_dict(pattern: PatternGraph) -> dict:
    return {"name": pattern.name, "n": pattern.graph.n, "edges": [list(e) for e in pattern.graph.edge_list()]}


def pattern_from_dict(d: dict) -> PatternGraph:
    return PatternGraph(build_graph(d["n"], d["edges"]), name=d.get("name", "custom"))


def witness_to_dict(w: SubdivisionWitness, include_pattern: bool = True) -> dict:
    out = {
        "branch_map": list(w.branch_map),
        "subdiv_paths": [
            {"edge": [a, b], "path": list(p)} for (a, b), p in sorted(w.subdiv_paths.items())
        ],
        "iso_vertices": list(w.iso_vertices),
    }
    if include_pattern:
        out = {"pattern": pattern_to_dict(w.pattern), **out}
    return out


def witness_from_dict(d: dict, pattern: PatternGraph | None = None) -> SubdivisionWitness:
    if pattern is None:
        pattern = pattern_from_dict(d["pattern"])
    paths = {tuple(item["edge"]): tuple(item["path"]) for item in d["subdiv_paths"]}
    return SubdivisionWitness(pattern, tuple(d["branch_map"]), paths, tuple(d.get("iso_vertices", ())))


def packing_to_dict(packing: Packing, pattern: PatternGraph | None = None) -> dict:
    if pattern is None and packing.witnesses:
        pattern = packing.witnesses[0].pattern
    return {
        "n": packing.n,
        "pattern": pattern_to_dict(pattern) if pattern is not None else None,
        "witnesses": [witness_to_dict(w, include_pattern=False) for w in packing.witnesses],
        "coverage": len(packing.covered) / packing.n if packing.n else 0.0,
        "stats": packing.stats,
    }


def packing_from_dict(d: dict) -> Packing:
    pattern = pattern_from_dict(d["pattern"]) if d.get("pattern") else None
    witnesses = [witness_from_dict(w, pattern) for w in d["witnesses"]]
    return Packing(d["n"], witnesses, dict(d.get("stats", {})))


def dump_packing(packing: Packing, pattern: PatternGraph | None = None) -> str:
    """Deterministic JSON text (sorted keys, fixed separators)."""
    return json.dumps(packing_to_dict(packing, pattern), sort_keys=True, indent=1, default=_json_default) + "\n"


def load_packing(text: str) -> Packing:
    return packing_from_dict(json.loads(text))


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (set, frozenset, tuple)):
        return sorted(obj) if isinstance(obj, (set, frozenset)) else list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
