"""Randomised vertex partitioning with degree and size guarantees.

A target set ``A`` is split into classes ``A_1..A_m`` with prescribed
proportions so that every tracked vertex ``v`` sees

* ``deg(v, A_i) >= (1 - 2*gamma) * p_i * d``                  (lower degree bound)
* ``|A_i| = (1 +- size_gamma) * p_i * |A|``                    (class sizes)
* ``deg(v, A_i) <= (1 + 2*gamma) * p_i * d``  if requested     (upper degree bound)

The initial assignment draws every vertex of ``A`` independently with
``P(v in A_i) = p_i``.  Violated constraints are then repaired by touching
only the vertices they depend on (a degree constraint of ``v`` depends on
``N(v) & A``), never by redrawing the whole assignment.  At the degrees
reachable in practice the local lemma condition fails, so plain parallel
Moser-Tardos resampling rarely converges; the default repair is a focused
random walk instead (see :func:`partition`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph_core import HostGraph

__all__ = [
    "PartitionError",
    "PreconditionDegree",
    "ResampleBudgetExhausted",
    "PartitionRequest",
    "PartitionResult",
    "partition",
    "split_request",
    "split_V_W",
    "sample_subset",
    "check_partition",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 1000
_EPS = 1e-9


class PartitionError(RuntimeError):
    pass


class PreconditionDegree(PartitionError):
    def __init__(self, msg: str, vertices: Sequence[int]):
        super().__init__(msg)
        self.vertices = list(vertices)


class ResampleBudgetExhausted(PartitionError):
    """Raised with the violated constraints and the final (best-effort) classes."""

    def __init__(self, msg: str, violations: list[tuple], best: "PartitionResult"):
        super().__init__(msg)
        self.violations = violations
        self.best = best


@dataclass(frozen=True)
class PartitionRequest:
    graph: HostGraph
    target: Sequence[int]
    tracked: Sequence[int]
    proportions: Sequence[float]
    gamma: float
    # reference degree: one number, or one per tracked vertex
    degree: float | Sequence[float]
    upper_bound_mode: bool = False
    size_gamma: float | None = None
    p_min: float | None = None
    # classes whose degree bounds are enforced (all by default)
    bounded_classes: Sequence[int] | None = None

    def __post_init__(self):
        props = np.asarray(self.proportions, dtype=float)
        if len(props) < 1:
            raise ValueError("need at least one class")
        if abs(props.sum() - 1.0) > 1e-12:
            raise ValueError(f"proportions sum to {props.sum()!r}, not 1")
        floor = self.p_min if self.p_min is not None else 0.0
        if (props <= 0).any() or (props < floor).any():
            raise ValueError("every proportion must be positive and at least p_min")
        if not (0 <= self.gamma <= 0.5):
            raise ValueError(f"gamma={self.gamma} outside [0, 1/2]")
        if self.size_gamma is not None and self.size_gamma < 0:
            raise ValueError("size_gamma must be non-negative")
        if len(self.target) == 0:
            raise ValueError("target set is empty")
        if np.ndim(self.degree) and len(self.degree) != len(self.tracked):
            raise ValueError("need one reference degree per tracked vertex")
        if self.bounded_classes is not None and not set(self.bounded_classes) <= set(range(len(props))):
            raise ValueError("bounded_classes out of range")

    @property
    def m(self) -> int:
        return len(self.proportions)

    @property
    def size_tolerance(self) -> float:
        return self.gamma if self.size_gamma is None else self.size_gamma

    @property
    def degrees(self) -> np.ndarray:
        """Reference degree of every tracked vertex."""
        return np.broadcast_to(np.asarray(self.degree, dtype=float), (len(self.tracked),))


@dataclass
class PartitionResult:
    classes: tuple[np.ndarray, ...]
    resample_rounds: int
    achieved_slack: float
    size_slack: float
    resampled: int = 0
    ok: bool = True
    stats: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.classes)


def _expected(req: PartitionRequest) -> np.ndarray:
    return np.outer(req.degrees, np.asarray(req.proportions, dtype=float))


def _degree_bounds(req: PartitionRequest) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds, one row per tracked vertex and one column per class."""
    expected = _expected(req)
    lower, upper = (1 - 2 * req.gamma) * expected, (1 + 2 * req.gamma) * expected
    if not req.upper_bound_mode:
        upper = np.full_like(upper, np.inf)
    if req.bounded_classes is not None:
        free = np.ones(req.m, dtype=bool)
        free[list(req.bounded_classes)] = False
        lower[:, free] = -np.inf
        upper[:, free] = np.inf
    return lower, upper


def _slacks(req: PartitionRequest, counts: np.ndarray, sizes: np.ndarray) -> tuple[float, float]:
    """Smallest gamma making the degree bounds hold, and worst relative size error."""
    expected = _expected(req)
    lower, upper = _degree_bounds(req)
    slack = 0.0
    live = expected > 0
    if counts.size and live.any():
        rel = np.divide(counts, expected, out=np.ones_like(expected), where=live)
        low_live = live & np.isfinite(lower)
        if low_live.any():
            slack = float(max(0.0, (1 - rel[low_live].min()) / 2))
        up_live = live & np.isfinite(upper)
        if up_live.any():
            slack = max(slack, float((rel[up_live].max() - 1) / 2))
    target = np.asarray(req.proportions, dtype=float) * len(req.target)
    size_slack = float(np.abs(sizes / target - 1).max())
    return slack, size_slack


def check_partition(req: PartitionRequest, classes: Sequence[Sequence[int]]) -> list[tuple]:
    """Independent recount of every constraint; returns the violated ones.

    Entries are ``("lower"|"upper", v, i)`` or ``("size", i)``.  Uses plain
    set membership, not the matrix bookkeeping of :func:`partition`.
    """
    g = req.graph
    lower, upper = _degree_bounds(req)
    sets = [set(int(v) for v in c) for c in classes]
    out = []
    for r, v in enumerate(req.tracked):
        for i, s in enumerate(sets):
            c = sum(1 for u in g.adj[v] if u in s)
            if c < lower[r, i] - _EPS:
                out.append(("lower", int(v), i))
            if c > upper[r, i] + _EPS:
                out.append(("upper", int(v), i))
    tol = req.size_tolerance
    for i, s in enumerate(sets):
        t = req.proportions[i] * len(req.target)
        if not ((1 - tol) * t - _EPS <= len(s) <= (1 + tol) * t + _EPS):
            out.append(("size", i))
    return out


def _check_precondition(req: PartitionRequest, deg_into_a: np.ndarray) -> None:
    d = req.degrees
    low = deg_into_a < (1 - req.gamma) * d - _EPS
    bad = low
    if req.upper_bound_mode:
        bad = low | (deg_into_a > (1 + req.gamma) * d + _EPS)
    if bad.any():
        tracked = np.asarray(req.tracked, dtype=np.int64)
        verts = tracked[bad]
        raise PreconditionDegree(
            f"{len(verts)} tracked vertices have degree into the target set outside "
            f"(1 +- {req.gamma}) times the reference degree",
            verts.tolist(),
        )


def partition(
    req: PartitionRequest,
    seed=0,
    *,
    mode: str = "targeted",
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    check_precondition: bool = True,
    noise: float = 0.2,
    patience: int | None = None,
) -> PartitionResult:
    """Split ``req.target`` into classes satisfying the degree and size bounds.

    Modes:

    ``"targeted"`` (default)
        Focused random walk.  For each violated degree constraint (rows with
        disjoint neighbourhoods per round) one of its variables is moved so
        that the constraint is repaired, picking the move that breaks the
        fewest currently satisfied constraints, or a random one with
        probability ``noise``.
    ``"moser_tardos"``
        Parallel Moser-Tardos: re-draw all variables of a maximal family of
        disjoint violated constraints.
    ``"rejection"``
        Re-draw every vertex until all constraints hold.

    ``patience`` stops early once the violation count has not improved for
    that many rounds.  On failure :class:`ResampleBudgetExhausted` carries
    the assignment with the fewest violations seen.  Also raises
    :class:`PreconditionDegree`.
    """
    if mode not in ("targeted", "moser_tardos", "rejection"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    g = req.graph
    target = np.asarray(sorted(set(int(v) for v in req.target)), dtype=np.int64)
    tracked = np.asarray(req.tracked, dtype=np.int64)
    m = req.m
    props = np.asarray(req.proportions, dtype=float)
    cum = np.cumsum(props)
    cum[-1] = 1.0

    # rows: tracked vertices, columns: positions in ``target``
    if len(tracked):
        B = g.csr[tracked][:, target].tocsr().astype(np.int32)
    else:
        B = sp.csr_matrix((0, len(target)), dtype=np.int32)
    Bt = B.T.tocsr()
    deg_into_a = np.asarray(B.sum(axis=1)).ravel()
    if check_precondition and len(tracked):
        _check_precondition(req, deg_into_a)

    lower, upper = _degree_bounds(req)
    lo_int = np.ceil(lower - _EPS)
    hi_int = np.floor(upper + _EPS)
    tol = req.size_tolerance
    size_target = props * len(target)
    size_lo = (1 - tol) * size_target - _EPS
    size_hi = (1 + tol) * size_target + _EPS

    def draw(k: int) -> np.ndarray:
        return np.searchsorted(cum, rng.random(k), side="right").clip(max=m - 1)

    label = draw(len(target))
    rows_idx = np.arange(len(target))

    def class_counts() -> np.ndarray:
        onehot = sp.csr_matrix(
            (np.ones(len(target), dtype=np.int32), (rows_idx, label)), shape=(len(target), m)
        )
        return (B @ onehot).toarray()

    resampled = 0
    rounds = 0
    best_count, best_label, best_round = None, label.copy(), 0
    while True:
        counts = class_counts()
        sizes = np.bincount(label, minlength=m)
        low_bad = counts < lo_int
        up_bad = counts > hi_int
        size_bad = (sizes < size_lo) | (sizes > size_hi)
        bad_rows = np.flatnonzero((low_bad | up_bad).any(axis=1))
        if not len(bad_rows) and not size_bad.any():
            break
        n_viol = int(low_bad.sum() + up_bad.sum() + size_bad.sum())
        if best_count is None or n_viol < best_count:
            best_count, best_label, best_round = n_viol, label.copy(), rounds
        stalled = patience is not None and rounds - best_round >= patience
        if rounds >= max_rounds or stalled or m == 1:
            label = best_label
            counts = class_counts()
            sizes = np.bincount(label, minlength=m)
            low_bad = counts < lo_int
            up_bad = counts > hi_int
            size_bad = (sizes < size_lo) | (sizes > size_hi)
            slack, size_slack = _slacks(req, counts, sizes)
            best = PartitionResult(
                tuple(target[label == i] for i in range(m)), rounds, slack, size_slack, resampled, ok=False
            )
            viol = [("lower", int(tracked[r]), int(i)) for r, i in zip(*np.nonzero(low_bad))]
            viol += [("upper", int(tracked[r]), int(i)) for r, i in zip(*np.nonzero(up_bad))]
            viol += [("size", int(i)) for i in np.flatnonzero(size_bad)]
            why = "no progress for %d rounds" % patience if stalled and rounds < max_rounds else "%d rounds" % rounds
            raise ResampleBudgetExhausted(
                f"{len(viol)} constraints still violated after {why}", viol, best
            )
        rounds += 1
        if mode == "rejection":
            label = draw(len(target))
            resampled += len(target)
            continue
        if mode == "moser_tardos":
            if len(bad_rows):
                pos = np.concatenate(_disjoint_events(B, bad_rows))
                label[pos] = draw(len(pos))
                resampled += len(pos)
            else:
                resampled += _rebalance(label, sizes, size_target, size_lo, size_hi, rng)
            continue

        if not len(bad_rows):
            resampled += _rebalance(label, sizes, size_target, size_lo, size_hi, rng, Bt, counts, lo_int, hi_int)
            continue
        resampled += _focused_moves(B, Bt, bad_rows, counts, label, lo_int, hi_int, rng, noise)
    slack, size_slack = _slacks(req, counts, sizes)
    return PartitionResult(tuple(target[label == i] for i in range(m)), rounds, slack, size_slack, resampled)


def _disjoint_events(B: sp.csr_matrix, bad_rows: np.ndarray) -> list[np.ndarray]:
    locked = np.zeros(B.shape[1], dtype=bool)
    chosen = [np.zeros(0, dtype=np.int64)]
    for r in bad_rows:
        cols = B.indices[B.indptr[r]:B.indptr[r + 1]]
        if len(cols) == 0 or locked[cols].any():
            continue
        locked[cols] = True
        chosen.append(cols)
    return chosen


def _gather(csr, items):
    """Concatenated neighbour rows of ``items`` and the owning item of each entry."""
    starts = csr.indptr[items]
    lens = csr.indptr[items + 1] - starts
    total = int(lens.sum())
    owner = np.repeat(np.arange(len(items)), lens)
    offs = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens) + np.repeat(starts, lens)
    return csr.indices[offs], owner


def _focused_moves(B, Bt, bad_rows, counts, label, lo_int, hi_int, rng, noise) -> int:
    """One WalkSAT-style pass over the violated rows; updates ``counts`` in place."""
    moved = 0
    for r in rng.permutation(bad_rows):
        low = np.flatnonzero(counts[r] < lo_int[r])
        high = np.flatnonzero(counts[r] > hi_int[r])
        if not len(low) and not len(high):
            continue
        cols = B.indices[B.indptr[r]:B.indptr[r + 1]]
        if len(low):
            i = int(low[int(rng.integers(len(low)))])
            cand = cols[label[cols] != i]
        else:
            i = int(high[int(rng.integers(len(high)))])
            cand = cols[label[cols] == i]
        if not len(cand):
            continue
        rows, owner = _gather(Bt, cand)
        src = label[cand]
        # constraints each candidate move would break
        brk_rem = np.bincount(owner, counts[rows, src[owner]] == lo_int[rows, src[owner]], len(cand))
        if len(low):
            dest = np.full(len(cand), i)
            brk_add = np.bincount(owner, counts[rows, i] == hi_int[rows, i], len(cand))
        else:
            at_high = (counts[rows] == hi_int[rows]).astype(float)
            per_cls = np.zeros((len(cand), counts.shape[1]))
            np.add.at(per_cls, owner, at_high)
            per_cls[:, i] = np.inf
            per_cls += rng.random(per_cls.shape) * 0.5
            dest = np.argmin(per_cls, axis=1)
            brk_add = np.floor(per_cls[np.arange(len(cand)), dest])
        cost = brk_rem + brk_add
        if rng.random() < noise:
            k = int(rng.integers(len(cand)))
        else:
            best = np.flatnonzero(cost == cost.min())
            k = int(best[int(rng.integers(len(best)))])
        u = cand[k]
        urows = Bt.indices[Bt.indptr[u]:Bt.indptr[u + 1]]
        counts[urows, label[u]] -= 1
        counts[urows, dest[k]] += 1
        label[u] = dest[k]
        moved += 1
    return moved


def _rebalance(label, sizes, size_target, size_lo, size_hi, rng, Bt=None, counts=None, lo_int=None, hi_int=None) -> int:
    """Move members of oversized classes into undersized ones.

    Runs once the degree constraints hold.  Given the current counts, members
    whose move breaks the fewest degree constraints go first; otherwise
    they are chosen at random.
    """
    sizes = sizes.astype(float).copy()
    moved = 0
    if Bt is not None:
        brk_rem = np.asarray(Bt @ (counts == lo_int).astype(np.int32))
        brk_add = np.asarray(Bt @ (counts == hi_int).astype(np.int32))
    seen = set()
    while True:
        over = sizes - size_hi
        under = size_lo - sizes
        if not ((over > 0).any() or (under > 0).any()):
            return moved
        # a window without an integer in it makes the sizes cycle
        key = tuple(sizes)
        if key in seen:
            return moved
        seen.add(key)
        rel = sizes / size_target - 1
        src = int(np.argmax(over)) if over.max() > 0 else int(np.argmax(rel))
        dst = int(np.argmax(under)) if under.max() > 0 else int(np.argmin(rel))
        members = np.flatnonzero(label == src)
        if src == dst or not len(members):
            return moved
        k = int(max(1, min(np.ceil(max(over[src], under[dst], 0)), len(members))))
        if Bt is None:
            pick = rng.choice(members, size=k, replace=False)
        else:
            cost = brk_rem[members, src] + brk_add[members, dst]
            pick = members[np.lexsort((rng.random(len(members)), cost))[:k]]
        label[pick] = dst
        sizes[src] -= k
        sizes[dst] += k
        moved += k


# --------------------------------------------------------------------------
# wrappers


def split_request(g: HostGraph, p: float, gamma: float, d: float | None = None, **kw) -> PartitionRequest:
    d = g.average_degree() if d is None else d
    everything = range(g.n)
    return PartitionRequest(g, everything, everything, (1 - p, p), gamma, d, upper_bound_mode=True, **kw)


def split_V_W(g: HostGraph, p: float, gamma: float, seed=0, *, d: float | None = None, **kw):
    """Split ``V(G)`` into ``(V, W)`` with ``|W| ~ p n`` and every vertex
    having about ``(1-p) d`` neighbours in ``V`` and ``p d`` in ``W``."""
    req = split_request(g, p, gamma, d)
    res = partition(req, seed, **kw)
    return res.classes[0], res.classes[1]


def sample_subset(
    g: HostGraph,
    anchors: Sequence[int],
    source: Sequence[int],
    p1: float,
    gamma: float,
    seed=0,
    *,
    d: float | Sequence[float] | None = None,
    **kw,
) -> np.ndarray:
    """Random ``U' <= source`` of relative size ``p1`` in which every anchor
    keeps at least ``(1 - 2 gamma) p1 d`` neighbours.

    ``d`` defaults to each anchor's own degree into ``source``.  Only
    ``U'`` is constrained; the rest of ``source`` may keep any number.
    """
    source = np.asarray(sorted(set(int(v) for v in source)), dtype=np.int64)
    if p1 >= 1:
        return source
    anchors = list(anchors)
    if d is None:
        members = set(source.tolist())
        d = [float(g.degree_into(a, members)) for a in anchors] if anchors else 0.0
    req = PartitionRequest(g, source, anchors, (p1, 1 - p1), gamma, d, upper_bound_mode=False, bounded_classes=(0,))
    return partition(req, seed, **kw).classes[0]
