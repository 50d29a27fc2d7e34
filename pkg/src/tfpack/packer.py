"""Pack vertex-disjoint pattern subdivisions into a near-regular graph.

The host is split into a large part ``V`` and a small part ``W``; ``G[V]``
is mostly covered by paths ``P_1..P_t`` on ``m`` vertices each.  An
auxiliary graph ``L`` lives on a sample ``U'`` of the unused ``W``-vertices:
an edge ``ab`` of ``L`` labelled ``i`` stands for the host path
``a, x_i .. y_i, b`` through the whole of ``P_i``, and no label is used
twice.  A subdivision found in ``L`` therefore expands to one in ``G`` that
uses every path it touches completely and only a ``2/m`` fraction of its
vertices from ``W``.  Subdivisions are inserted one at a time until the
auxiliary graph stops producing new ones.

:func:`pack_full` handles patterns with isolated vertices by packing the
pattern's core and attaching spare vertices afterwards.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .finder import (
    BudgetExhausted,
    FinderBudget,
    NotFound,
    find_in_complete_bipartite,
    find_subdivision,
)
from .graph_core import (
    HostGraph,
    Packing,
    PatternGraph,
    SubdivisionWitness,
    build_graph,
    induced_subgraph,
    validate_witness,
)
from .partitioner import (
    PartitionError,
    PreconditionDegree,
    ResampleBudgetExhausted,
    partition,
    sample_subset,
    split_request,
)
from .path_cover import PartitionFailed, PathCover, build_path_cover

__all__ = [
    "PipelineStageFailed",
    "LabelMissing",
    "InvariantViolation",
    "PackerConfig",
    "AuxiliaryGraph",
    "PackerState",
    "pack_core",
    "pack_full",
    "build_aux",
    "expand_witness",
    "select_prefix",
]

log = logging.getLogger(__name__)


class PipelineStageFailed(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class LabelMissing(RuntimeError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class PackerConfig:
    """Parameters of the packing pipeline.

    ``p`` is the share of vertices put in ``W``, ``m`` the number of vertices
    per cover path, ``gamma`` the partition tolerance, ``epsilon`` the share
    of ``V`` the path cover may leave out, ``u_prime_fraction`` the share of
    the unused ``W``-vertices sampled into the auxiliary graph each round and
    ``eta`` the coverage slack targeted by :func:`pack_full`.  ``strict``
    turns failed partitions into :class:`PipelineStageFailed` instead of
    carrying on with the best assignment found.
    """

    p: float = 0.2
    m: int = 8
    gamma: float = 0.4
    epsilon: float = 0.1
    u_prime_fraction: float = 0.3
    eta: float = 0.1
    seed: int = 0
    max_outer_rounds: int = 20
    finder: FinderBudget = field(default_factory=lambda: FinderBudget(node_budget=50_000, strategy="dense_greedy"))
    strict: bool = False
    patience: int = 5
    partition_rounds: int = 200

    def __post_init__(self):
        if not 0 < self.p < 0.5:
            raise ValueError("p must lie in (0, 1/2)")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.u_prime_fraction <= 1:
            raise ValueError("u_prime_fraction must lie in (0, 1]")
        if not 0 <= self.eta < 1:
            raise ValueError("eta must lie in [0, 1)")
        if self.max_outer_rounds < 1:
            raise ValueError("max_outer_rounds must be at least 1")

    @property
    def partition_gamma(self) -> float:
        return min(self.gamma, 0.5)

    @property
    def beta(self) -> float:
        return 4 / self.m


def _seed(cfg: PackerConfig, *tags: int) -> list[int]:
    return [int(cfg.seed), *tags]


# --------------------------------------------------------------------------
# auxiliary graph


class AuxiliaryGraph:
    """Graph on ``U'`` whose edges carry distinct path labels.

    ``edges[(a, b)] = (i, ex, ey)`` with ``a < b``: the edge stands for the
    host path ``ex, x_i .. y_i, ey``.
    """

    def __init__(self, g: HostGraph, cover: PathCover, vertices):
        self.g = g
        self.cover = cover
        self.vertices: set[int] = set(int(v) for v in vertices)
        self.edges: dict[tuple[int, int], tuple[int, int, int]] = {}
        self.label_of: dict[int, tuple[int, int]] = {}
        self.allowed: set[int] = set()

    def _nbrs(self, v: int) -> list[int]:
        return [w for w in self.g.adj[v] if w in self.vertices]

    def _first_pair(self, i: int) -> tuple[int, int] | None:
        path = self.cover.paths[i]
        xs, ys = self._nbrs(path[0]), self._nbrs(path[-1])
        best = None
        for a in xs:
            for b in ys:
                if a == b:
                    continue
                key = (a, b) if a < b else (b, a)
                if key in self.edges:
                    continue
                if best is None or key < best[0]:
                    best = (key, a, b)
        if best is None:
            return None
        return best[1], best[2]

    def admissible(self, i: int) -> tuple[int, int] | None:
        """The (x-side, y-side) pair the greedy rule would give label ``i``."""
        if i in self.label_of or i not in self.allowed:
            return None
        return self._first_pair(i)

    def extend(self, labels=None) -> int:
        """Add edges in ascending label order until no label can be used."""
        added = 0
        for i in sorted(self.allowed if labels is None else labels):
            pair = self.admissible(i)
            if pair is None:
                continue
            a, b = pair
            key = (a, b) if a < b else (b, a)
            self.edges[key] = (i, a, b)
            self.label_of[i] = key
            added += 1
        return added

    def add_edge(self, a: int, b: int, i: int) -> None:
        key = (a, b) if a < b else (b, a)
        if key in self.edges or i in self.label_of:
            raise ValueError("edge or label already present")
        path = self.cover.paths[i]
        if not (self.g.has_edge(a, path[0]) and self.g.has_edge(b, path[-1])):
            raise ValueError("edge does not attach to the path ends")
        self.edges[key] = (i, a, b)
        self.label_of[i] = key

    def restrict(self, vertices, allowed) -> None:
        """Drop vertices outside ``vertices`` and labels outside ``allowed``."""
        self.vertices &= set(vertices)
        self.allowed = set(allowed)
        for key, (i, _, _) in list(self.edges.items()):
            if key[0] not in self.vertices or key[1] not in self.vertices or i not in self.allowed:
                del self.edges[key]
                del self.label_of[i]

    def is_maximal(self) -> bool:
        return all(self.admissible(i) is None for i in self.allowed)

    def unused_labels(self) -> list[int]:
        return sorted(i for i in self.allowed if i not in self.label_of)

    def host_graph(self) -> tuple[HostGraph, list[int]]:
        ids = sorted(self.vertices)
        index = {v: k for k, v in enumerate(ids)}
        return build_graph(len(ids), [(index[a], index[b]) for a, b in self.edges]), ids

    @property
    def average_degree(self) -> float:
        return 2 * len(self.edges) / len(self.vertices) if self.vertices else 0.0


def build_aux(g: HostGraph, cover: PathCover, U_prime, J_prime) -> AuxiliaryGraph:
    """Maximal auxiliary graph on ``U_prime`` with labels from ``J_prime``.

    Labels are processed in ascending order and each takes the
    lexicographically first admissible pair.  A label left without an edge
    had no admissible pair at its turn, and later insertions only remove
    pairs, so the result is maximal.
    """
    aux = AuxiliaryGraph(g, cover, U_prime)
    aux.allowed = set(J_prime)
    aux.extend()
    return aux


def expand_witness(w_L: SubdivisionWitness, aux: AuxiliaryGraph, ids=None) -> SubdivisionWitness:
    """Replace every edge of a witness in ``L`` by its labelled host path.

    ``ids`` maps the witness's vertex ids to host ids when the witness was
    found in a relabelled copy of ``L``.
    """
    tr = (lambda v: v) if ids is None else (lambda v: ids[v])
    paths = {}
    for e, seq in w_L.subdiv_paths.items():
        seq = [tr(v) for v in seq]
        out = [seq[0]]
        for a, b in zip(seq, seq[1:]):
            key = (a, b) if a < b else (b, a)
            if key not in aux.edges:
                raise LabelMissing(f"edge {key} of the witness has no label")
            i, ex, ey = aux.edges[key]
            path = aux.cover.paths[i]
            if a == ex:
                out.extend(path)
            else:
                out.extend(path[::-1])
            out.append(b)
        paths[e] = tuple(out)
    return SubdivisionWitness(w_L.pattern, tuple(tr(v) for v in w_L.branch_map), paths)


# --------------------------------------------------------------------------
# packing state


class PackerState:
    """The growing family together with the sets ``J``, ``U``, ``X``, ``J'``."""

    def __init__(self, g: HostGraph, V, W, cover: PathCover, p: float, d: float):
        self.g = g
        self.V = np.asarray(V, dtype=np.int64)
        self.W = np.asarray(W, dtype=np.int64)
        self.W_set = set(self.W.tolist())
        self.cover = cover
        self.m = cover.m
        self.p = p
        self.d = d
        self.family: list[SubdivisionWitness] = []
        self.used: set[int] = set()
        self.path_of: dict[int, int] = {v: i for i, path in enumerate(cover.paths) for v in path}
        self.J: set[int] = set(range(len(cover.paths)))
        self.U: set[int] = set(self.W_set)
        # neighbours in W \ U, kept up to date on insertion
        self.used_w_nbrs = np.zeros(g.n, dtype=np.int64)
        self.x_threshold = p * d / 2
        self.rounds = 0

    # endvertices of unused paths with at least p d / 2 neighbours in W \ U
    @property
    def X(self) -> set[int]:
        out = set()
        for i in self.J:
            path = self.cover.paths[i]
            for v in (path[0], path[-1]):
                if self.used_w_nbrs[v] >= self.x_threshold:
                    out.add(v)
        return out

    @property
    def J_prime(self) -> set[int]:
        t = self.x_threshold
        c = self.used_w_nbrs
        return {i for i in self.J if c[self.cover.paths[i][0]] < t and c[self.cover.paths[i][-1]] < t}

    def check_member(self, H: SubdivisionWitness) -> None:
        vs = H.vertices()
        touched = {self.path_of[v] for v in vs if v in self.path_of}
        for j in touched:
            if not set(self.cover.paths[j]) <= vs:
                raise InvariantViolation(f"witness uses part of path {j}")
        in_w = len(vs & self.W_set)
        if in_w * self.m > 2 * len(vs):
            raise InvariantViolation(f"witness has {in_w} of {len(vs)} vertices in W, m={self.m}")

    def insert(self, H: SubdivisionWitness) -> None:
        vs = H.vertices()
        if vs & self.used:
            raise InvariantViolation("witness overlaps the family")
        self.check_member(H)
        touched = {self.path_of[v] for v in vs if v in self.path_of}
        if not touched <= self.J:
            raise InvariantViolation("witness reuses a path")
        self.family.append(H)
        self.used |= vs
        self.J -= touched
        new_w = vs & self.U
        self.U -= new_w
        if new_w:
            idx = np.fromiter(new_w, dtype=np.int64)
            np.add.at(self.used_w_nbrs, self.g.csr[idx].indices, 1)

    def check_all(self) -> None:
        """Recompute every invariant from the family alone."""
        seen: set[int] = set()
        w_total = 0
        for H in self.family:
            vs = H.vertices()
            if vs & seen:
                raise InvariantViolation("family members overlap")
            seen |= vs
            self.check_member(H)
            w_total += len(vs & self.W_set)
        if seen != self.used:
            raise InvariantViolation("used-vertex bookkeeping is off")
        U = self.W_set - seen
        if U != self.U:
            raise InvariantViolation("U bookkeeping is off")
        if len(self.W_set - U) != w_total:
            raise InvariantViolation("|W \\ U| differs from the sum over members")
        if w_total * self.m > 2 * self.g.n:
            raise InvariantViolation("|W \\ U| exceeds 2n/m")
        J = {i for i, path in enumerate(self.cover.paths) if not (set(path) & seen)}
        if J != self.J:
            raise InvariantViolation("J bookkeeping is off")
        counts = self.g.csr @ np.isin(np.arange(self.g.n), list(self.W_set - U)).astype(np.int64)
        if not np.array_equal(counts, self.used_w_nbrs):
            raise InvariantViolation("W \\ U neighbour counts are off")


def _split(g: HostGraph, cfg: PackerConfig, d: float):
    req = split_request(g, cfg.p, cfg.partition_gamma, d)
    kw = dict(max_rounds=cfg.partition_rounds, patience=cfg.patience)
    try:
        res = partition(req, _seed(cfg, 1), **kw)
        ok = True
    except PreconditionDegree as exc:
        if cfg.strict:
            raise PipelineStageFailed("split", exc) from exc
        ok = False
        try:
            res = partition(req, _seed(cfg, 1), check_precondition=False, **kw)
        except ResampleBudgetExhausted as exc2:
            res = exc2.best
    except ResampleBudgetExhausted as exc:
        if cfg.strict:
            raise PipelineStageFailed("split", exc) from exc
        ok = False
        res = exc.best
    return res.classes[0], res.classes[1], ok


def _sample_u_prime(g, state: PackerState, cfg: PackerConfig, J_prime, r: int):
    U = sorted(state.U)
    if cfg.u_prime_fraction >= 1 or not U:
        return U, True
    anchors = sorted({v for i in J_prime for v in (state.cover.paths[i][0], state.cover.paths[i][-1])})
    kw = dict(max_rounds=cfg.partition_rounds, patience=cfg.patience)
    try:
        return sample_subset(g, anchors, U, cfg.u_prime_fraction, cfg.partition_gamma, _seed(cfg, 3, r), **kw).tolist(), True
    except PartitionError as exc:
        if cfg.strict:
            raise PipelineStageFailed("sample", exc) from exc
        if isinstance(exc, ResampleBudgetExhausted):
            return exc.best.classes[0].tolist(), False
        try:
            out = sample_subset(
                g, anchors, U, cfg.u_prime_fraction, cfg.partition_gamma, _seed(cfg, 3, r), check_precondition=False, **kw
            )
            return out.tolist(), False
        except ResampleBudgetExhausted as exc2:
            return exc2.best.classes[0].tolist(), False


def _endgame(aux: AuxiliaryGraph, H: PatternGraph, stats: dict):
    """Look for a complete bipartite piece of ``L`` next to an unused label.

    For a label ``j`` without an edge, every pair between ``N(x_j) & U'`` and
    ``N(y_j) & U'`` is already an edge of ``L`` (otherwise ``L`` would not be
    maximal), so two large disjoint sides give a complete bipartite graph.
    Returns ``("found", witness)``, ``("extended", None)`` if a missing edge
    was added with label ``j``, or ``None``.
    """
    need = H.order**2
    for j in aux.unused_labels():
        path = aux.cover.paths[j]
        nx_, ny_ = aux._nbrs(path[0]), aux._nbrs(path[-1])
        ny_set = set(ny_)
        # vertices seen from both ends go to the x side last
        A_x = sorted(([v for v in nx_ if v not in ny_set] + [v for v in nx_ if v in ny_set])[:need])
        A_y = sorted(v for v in ny_ if v not in set(A_x))[:need]
        if len(A_x) < need or len(A_y) < need:
            continue
        stats["endgame_attempts"] = stats.get("endgame_attempts", 0) + 1
        missing = [(a, b) for a in A_x for b in A_y if ((a, b) if a < b else (b, a)) not in aux.edges]
        if missing:
            a, b = missing[0]
            aux.add_edge(a, b, j)
            stats["endgame_extensions"] = stats.get("endgame_extensions", 0) + 1
            return "extended", None
        stats["endgame_hits"] = stats.get("endgame_hits", 0) + 1
        return "found", find_in_complete_bipartite(A_x, A_y, H)
    return None


def pack_core(g: HostGraph, H: PatternGraph, cfg: PackerConfig | None = None, *, d: float | None = None) -> Packing:
    """Packing of ``H``-subdivisions in a near-regular graph ``g``.

    ``H`` must have at least one edge and no isolated vertices.  ``d`` is
    the reference degree (the average degree by default).  Every inserted
    subdivision uses the cover paths it meets completely and has at most
    ``2|H'|/m`` of its vertices ``H'`` in ``W``.
    """
    cfg = cfg or PackerConfig()
    if H.isolated_count:
        raise ValueError("pattern has isolated vertices; pass its core")
    if H.num_edges == 0:
        raise ValueError("pattern has no edges")
    d = g.average_degree() if d is None else float(d)
    stats: dict = {"d_ref": d}
    if g.n == 0 or d == 0:
        stats.update(coverage=0.0, rounds=0, J_final=0, J_ratio=0.0, aux_density=0.0, witnesses=0)
        return Packing(g.n, [], stats)

    V, W, split_ok = _split(g, cfg, d)
    stats["split_ok"] = split_ok
    try:
        cover = build_path_cover(
            g, V, cfg.m, d, cfg.partition_gamma, cfg.epsilon, _seed(cfg, 2),
            strict=cfg.strict,
            partition_kw=dict(max_rounds=cfg.partition_rounds, patience=cfg.patience),
        )
    except PartitionFailed as exc:
        raise PipelineStageFailed("path_cover", exc) from exc
    for k in ("partition_ok", "precondition_ok", "shortfall", "endvertex_bound_ok", "max_endvertex_degree"):
        stats[f"cover_{k}"] = cover.stats[k]
    stats["paths"] = len(cover.paths)
    stats["V"] = len(V)
    stats["W"] = len(W)

    state = PackerState(g, V, W, cover, cfg.p, d)
    stall = 0
    aux_density = 0.0
    sample_ok = True
    finder_failures = 0
    rounds = 0
    for r in range(cfg.max_outer_rounds):
        rounds = r + 1
        J_prime = state.J_prime
        if not J_prime:
            break
        U_prime, ok = _sample_u_prime(g, state, cfg, J_prime, r)
        sample_ok &= ok
        aux = build_aux(g, cover, U_prime, J_prime)
        aux_density = max(aux_density, aux.average_degree)
        inserted = 0
        while True:
            Lg, ids = aux.host_graph()
            try:
                w_L = find_subdivision(Lg, H, cfg.finder)
            except BudgetExhausted:
                w_L = NotFound(False, cfg.finder.node_budget, "budget")
            if isinstance(w_L, NotFound):
                finder_failures += 1
                hit = _endgame(aux, H, stats)
                if hit is None:
                    break
                if hit[0] == "extended":
                    continue
                w_L, ids = hit[1], None
            Hg = expand_witness(w_L, aux, ids)
            check = validate_witness(g, Hg)
            if not check.ok:
                raise InvariantViolation(f"expanded witness fails validation: {check.reasons}")
            state.insert(Hg)
            inserted += 1
            J_prime = state.J_prime
            aux.restrict(aux.vertices - Hg.vertices(), J_prime)
            aux.extend()
        state.check_all()
        if inserted == 0:
            stall += 1
            if cfg.u_prime_fraction >= 1 or stall >= 2:
                break
        else:
            stall = 0

    pn_over_m = cfg.p * g.n / cfg.m
    stats.update(
        rounds=rounds,
        J_final=len(state.J),
        J_ratio=len(state.J) / pn_over_m if pn_over_m else 0.0,
        aux_density=aux_density,
        witnesses=len(state.family),
        sample_ok=sample_ok,
        finder_failures=finder_failures,
        W_used=len(state.W_set - state.U),
    )
    packing = Packing(g.n, list(state.family), stats)
    packing.trace = {"V": V.tolist(), "W": W.tolist(), "paths": list(cover.paths), "m": cfg.m}
    stats["coverage"] = packing.coverage_fraction
    return packing


# --------------------------------------------------------------------------
# patterns with isolated vertices


def select_prefix(sizes, extra: int, n: int, eta: float) -> tuple[int, list[int], bool]:
    """How many of the (descending) ``sizes`` to keep.

    ``z_j`` is the sum of ``size_i + extra`` over the first ``j``.  Returns
    ``(l, z, fallback)`` where ``l`` is the least index with
    ``z_l >= (1 - eta) n``, unless that index does not exist or has
    ``z_l > n``; then ``l`` is the largest index with ``z_l <= n`` and
    ``fallback`` is true.
    """
    z = []
    total = 0
    for s in sizes:
        total += s + extra
        z.append(total)
    target = (1 - eta) * n
    for j, zj in enumerate(z, start=1):
        if zj >= target - 1e-9:
            if zj <= n:
                return j, z, False
            break
    fit = 0
    for j, zj in enumerate(z, start=1):
        if zj <= n:
            fit = j
    return fit, z, True


def pack_full(g: HostGraph, F: PatternGraph, cfg: PackerConfig | None = None, eta: float | None = None) -> Packing:
    """Packing of ``F``-subdivisions, isolated vertices of ``F`` included.

    A reserve of ``floor(gamma d)`` lowest-id vertices is set aside, the core
    of ``F`` is packed into the rest, the largest members are kept while
    their sizes plus the isolated vertices fit, and each kept member gets
    ``|F| - |core|`` unused vertices as its isolated vertices.
    """
    cfg = cfg or PackerConfig()
    eta = cfg.eta if eta is None else eta
    n = g.n
    iso = F.isolated_count
    if F.num_edges == 0:
        k = F.order
        groups = n // k if k else 0
        ws = [SubdivisionWitness(F, (), {}, tuple(range(i * k, (i + 1) * k))) for i in range(groups)]
        packing = Packing(n, ws, {"witnesses": groups, "rounds": 0, "J_final": 0, "aux_density": 0.0})
        packing.stats["coverage"] = packing.coverage_fraction
        return packing

    H = F.core_pattern()
    d = g.average_degree()
    s = int(math.floor(cfg.gamma * d))
    s = min(s, n)
    rest, ids = induced_subgraph(g, range(s, n))
    inner = pack_core(rest, H, cfg)
    stats = dict(inner.stats)
    stats["reserve"] = s
    members = []
    for w in inner.witnesses:
        members.append(
            SubdivisionWitness(
                F,
                tuple(ids[v] for v in w.branch_map),
                {e: tuple(ids[v] for v in p) for e, p in w.subdiv_paths.items()},
            )
        )
    members.sort(key=lambda w: (-w.size, min(w.vertices())))
    ell, z, fallback = select_prefix([w.size for w in members], iso, n, eta)
    if iso == 0:
        # nothing to attach: keep every member
        ell = len(members)
    kept = members[:ell]
    if iso:
        used = set().union(*(w.vertices() for w in kept)) if kept else set()
        spare = (v for v in range(n) if v not in used)
        kept = [w.with_iso_vertices([next(spare) for _ in range(iso)]) for w in kept]
    stats.update(
        kept=len(kept),
        prefix_fallback=fallback,
        target=(1 - eta) * n,
        witnesses=len(kept),
    )
    packing = Packing(n, kept, stats)
    if inner.trace:
        packing.trace = {
            "V": [ids[v] for v in inner.trace["V"]],
            "W": [ids[v] for v in inner.trace["W"]],
            "paths": [tuple(ids[v] for v in p) for p in inner.trace["paths"]],
            "m": inner.trace["m"],
            "reserve": list(range(s)),
        }
    stats["coverage"] = packing.coverage_fraction
    return packing
