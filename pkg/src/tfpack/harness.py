"""Seeded experiment runs, CSV statistics and parameter calibration.

Every run re-validates its packing from scratch and again after a JSON
round trip, and rechecks the path and ``W`` constraints against the split
and cover recorded by the packer.  A run that fails any check still
produces a row, with ``all_invariants_ok`` false.
"""

from __future__ import annotations

import csv
import functools
import io
import itertools
import json
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .generators import GenSpec, generate, named_pattern
from .graph_core import (
    HostGraph,
    Packing,
    PatternGraph,
    dump_packing,
    load_packing,
    read_edge_list,
    validate_packing,
)
from .packer import PackerConfig, pack_full

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "CSV_COLUMNS",
    "THREADS_ENV",
    "check_members",
    "run_one",
    "run_experiment",
    "calibrate",
    "write_csv",
    "load_config",
    "resolve_pattern",
]

log = logging.getLogger(__name__)

THREADS_ENV = "TFPACK_THREADS"

CSV_COLUMNS = [
    "n", "d", "pattern", "p", "m", "eps", "gamma", "seed", "coverage", "rounds",
    "J_final", "aux_density", "witnesses", "wall_ms", "all_invariants_ok",
]

# grid keys accepted by the experiment spec, mapped to PackerConfig fields
GRID_KEYS = {
    "p": "p", "m": "m", "eps": "epsilon", "epsilon": "epsilon", "gamma": "gamma",
    "u_prime_fraction": "u_prime_fraction", "eta": "eta", "max_outer_rounds": "max_outer_rounds",
    "patience": "patience", "partition_rounds": "partition_rounds",
}


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


def resolve_pattern(name: str, pattern_file: str | None = None) -> PatternGraph:
    """Named pattern, or the edge list in ``pattern_file`` for ``custom``."""
    if name == "custom":
        if not pattern_file:
            raise ConfigError("pattern", "pattern 'custom' needs a pattern file")
        return PatternGraph(read_edge_list(pattern_file), name=Path(pattern_file).stem)
    return named_pattern(name)


@dataclass
class ExperimentSpec:
    """Instances x patterns x config grid x repetitions.

    ``instances`` holds :class:`GenSpec` objects or paths to edge-list files.
    ``pattern`` is one pattern id or a list of them; the id ``custom`` reads
    ``pattern_file``.  ``grid`` maps config keys (see ``GRID_KEYS``) to
    lists of values.
    """

    instances: list
    pattern: str | list = "C3"
    grid: dict = field(default_factory=dict)
    repetitions: int = 1
    seed_base: int = 0
    out_csv: str | None = None
    packings_dir: str | None = None
    pattern_file: str | None = None
    max_failure_rate: float = 0.05

    def __post_init__(self):
        if not self.instances:
            raise ConfigError("instances", "at least one instance is required")
        if self.repetitions < 1:
            raise ConfigError("repetitions", "must be at least 1")
        if not self.patterns:
            raise ConfigError("pattern", "at least one pattern is required")
        for name in self.patterns:
            if name == "custom" and not self.pattern_file:
                raise ConfigError("pattern_file", "pattern 'custom' needs a pattern file")
            if name != "custom":
                try:
                    named_pattern(name)
                except KeyError as exc:
                    raise ConfigError("pattern", f"unknown pattern {name!r}") from exc
        for k, vals in self.grid.items():
            if k not in GRID_KEYS:
                raise ConfigError(f"grid.{k}", "unknown parameter")
            if not isinstance(vals, (list, tuple)) or not vals:
                raise ConfigError(f"grid.{k}", "must be a nonempty list")

    @property
    def patterns(self) -> list[str]:
        return [self.pattern] if isinstance(self.pattern, str) else list(self.pattern)

    def configs(self) -> list[dict]:
        keys = sorted(self.grid)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.grid[k] for k in keys))]

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "expected a mapping")
        known = {f.name for f in fields(cls)}
        for k in doc:
            if k not in known:
                raise ConfigError(k, "unknown key")
        raw = doc.get("instances")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("instances", "must be a nonempty list")
        inst = []
        for i, item in enumerate(raw):
            where = f"instances[{i}]"
            if isinstance(item, str):
                inst.append(item)
            elif isinstance(item, dict):
                try:
                    inst.append(_expand_instance(item))
                except (TypeError, ValueError, KeyError) as exc:
                    raise ConfigError(where, str(exc)) from exc
            else:
                raise ConfigError(where, "expected a file path or a generator mapping")
        flat = []
        for x in inst:
            flat.extend(x if isinstance(x, list) else [x])
        kw = {k: v for k, v in doc.items() if k != "instances"}
        return cls(instances=flat, **kw)


def _expand_instance(item: dict) -> list[GenSpec]:
    """A generator mapping; list-valued ``n``, ``d`` or ``seed`` expand to a product."""
    kind = item.get("kind", "random_regular")
    allowed = {"kind", "n", "d", "seed", "named_id"}
    for k in item:
        if k not in allowed:
            raise KeyError(f"unknown key {k!r}")

    def as_list(v):
        return list(v) if isinstance(v, (list, tuple)) else [v]

    out = []
    for n, d, seed in itertools.product(as_list(item.get("n", 0)), as_list(item.get("d", 0)), as_list(item.get("seed", 0))):
        out.append(GenSpec(kind, int(n), int(d), int(seed), item.get("named_id", "")))
    return out


def load_config(path: str | os.PathLike) -> dict:
    """Read a JSON or YAML document."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    if path.suffix in (".yaml", ".yml"):
        import yaml

        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "expected a mapping at the top level")
    return doc


def make_config(params: dict, seed: int, base: PackerConfig | None = None) -> PackerConfig:
    kw = {}
    for k, v in params.items():
        if k not in GRID_KEYS:
            raise ConfigError(k, "unknown parameter")
        kw[GRID_KEYS[k]] = v
    base = base or PackerConfig()
    merged = {f.name: getattr(base, f.name) for f in fields(PackerConfig)}
    merged.update(kw)
    merged["seed"] = seed
    try:
        return PackerConfig(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from exc


# --------------------------------------------------------------------------
# checks


def check_members(packing: Packing, W: Sequence[int], paths: Sequence[Sequence[int]], m: int) -> list[str]:
    """Recount the all-or-nothing path rule and the ``W`` share of every member.

    Isolated vertices attached for the pattern are not part of the packed
    core and are left out of both counts.
    """
    reasons = []
    W = set(W)
    path_of = {}
    for i, p in enumerate(paths):
        if len(p) != m:
            reasons.append(f"path[{i}]:WrongLength")
        for v in p:
            path_of[v] = i
    for k, w in enumerate(packing.witnesses):
        core_vs = set(w.branch_map) | set(w.internal_vertices())
        touched = {path_of[v] for v in core_vs if v in path_of}
        for i in sorted(touched):
            if not set(paths[i]) <= core_vs:
                reasons.append(f"witness[{k}]:PartialPath")
                break
        if core_vs and len(core_vs & W) * m > 2 * len(core_vs):
            reasons.append(f"witness[{k}]:TooMuchW")
    return reasons


def _format(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.6f}"
    return str(x)


def run_one(g: HostGraph, F: PatternGraph, cfg: PackerConfig, meta: dict) -> tuple[dict, str | None]:
    """One packing run.  Returns the CSV row and the packing JSON (or ``None``)."""
    t0 = time.perf_counter()
    row = {
        "n": g.n,
        "d": meta.get("d", round(g.average_degree(), 6)),
        "pattern": F.name,
        "p": cfg.p,
        "m": cfg.m,
        "eps": cfg.epsilon,
        "gamma": cfg.gamma,
        "seed": cfg.seed,
    }
    text = None
    try:
        packing = pack_full(g, F, cfg)
        report = validate_packing(g, packing)
        reasons = list(report.reasons)
        if packing.trace:
            reasons += check_members(packing, packing.trace["W"], packing.trace["paths"], packing.trace["m"])
        text = dump_packing(packing, F)
        again = validate_packing(g, load_packing(text))
        if not again.valid:
            reasons.append("RoundTripInvalid")
        if again.coverage != report.coverage:
            reasons.append("RoundTripCoverage")
        st = packing.stats
        row.update(
            coverage=report.coverage,
            rounds=st.get("rounds", 0),
            J_final=st.get("J_final", 0),
            aux_density=float(st.get("aux_density", 0.0)),
            witnesses=len(packing.witnesses),
            all_invariants_ok=not reasons,
        )
        row["_stats"] = st
        row["_reasons"] = reasons
    except Exception as exc:  # a failing run still yields a row
        log.exception("run failed")
        row.update(coverage=float("nan"), rounds=0, J_final=0, aux_density=float("nan"), witnesses=0, all_invariants_ok=False)
        row["_reasons"] = [f"{type(exc).__name__}: {exc}"]
        row["_stats"] = {}
    row["wall_ms"] = int(round((time.perf_counter() - t0) * 1000))
    return row, text


@functools.lru_cache(maxsize=2)
def _generated(inst: GenSpec) -> tuple[HostGraph, dict]:
    # tasks are ordered instance-major, so a tiny cache saves regeneration per pattern/config/rep
    g = generate(inst)
    return g, {"d": inst.d if inst.kind != "named" else round(g.average_degree(), 6)}


def _load_instance(inst) -> tuple[HostGraph, dict]:
    if isinstance(inst, GenSpec):
        return _generated(inst)
    return read_edge_list(inst), {}


def _task(args):
    inst_index, inst, pattern, pattern_file, params, seed = args
    g, meta = _load_instance(inst)
    F = resolve_pattern(pattern, pattern_file)
    cfg = make_config(params, seed)
    row, text = run_one(g, F, cfg, meta)
    row["_instance"] = inst_index
    row["_params"] = params
    return row, text


def _threads(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(THREADS_ENV, f"not an integer: {env!r}") from exc
    return 1


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> list[dict]:
    """Run every (instance, config, repetition) and return rows in a fixed order.

    Rows come back in task order whatever the worker count.  With
    ``spec.out_csv`` set, the CSV is written once at the end; with
    ``spec.packings_dir`` set, each packing is saved as JSON.
    """
    for inst in spec.instances:
        if not isinstance(inst, GenSpec) and not Path(inst).is_file():
            raise OSError(f"{inst}: no such file")
    for params in spec.configs():
        make_config(params, spec.seed_base)
    tasks = []
    for ii, inst in enumerate(spec.instances):
        for pattern in spec.patterns:
            for params in spec.configs():
                for rep in range(spec.repetitions):
                    tasks.append((ii, inst, pattern, spec.pattern_file, params, spec.seed_base + rep))
    nw = _threads(workers)
    if nw > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            results = list(ex.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    rows = []
    for k, (row, text) in enumerate(results):
        row["_task"] = k
        rows.append(row)
        if spec.packings_dir and text is not None:
            out = Path(spec.packings_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"run{k:05d}.json").write_text(text)
    if spec.out_csv:
        write_csv(rows, spec.out_csv)
    return rows


def write_csv(rows: list[dict], path=None, *, include_timing: bool = True) -> str:
    """CSV text with the fixed column set; also written to ``path`` if given."""
    cols = CSV_COLUMNS if include_timing else [c for c in CSV_COLUMNS if c != "wall_ms"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_format(row[c]) for c in cols])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


# --------------------------------------------------------------------------
# calibration


@dataclass
class CalibrationReport:
    best: dict | None
    cells: list[dict]

    def table(self) -> str:
        cols = ["params", "runs", "mean_coverage", "sd_coverage", "failure_rate", "partition_failure_rate", "excluded", "why"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for c in self.cells:
            w.writerow([json.dumps(c["params"], sort_keys=True)] + [_format(c[k]) for k in cols[1:]])
        return buf.getvalue()


def calibrate(spec: ExperimentSpec, workers: int | None = None) -> CalibrationReport:
    """Grid cell with the best mean coverage among cells without failures.

    A cell is excluded when any run fails an invariant, or when more than
    ``spec.max_failure_rate`` of its partitions (split, cover or sample)
    ran out of resampling budget.
    """
    rows = run_experiment(spec, workers)
    cells = []
    for params in spec.configs():
        mine = [r for r in rows if r["_params"] == params]
        covs = [r["coverage"] for r in mine if r["all_invariants_ok"]]
        failures = sum(not r["all_invariants_ok"] for r in mine)
        part_fail = 0
        part_total = 0
        for r in mine:
            st = r["_stats"]
            for key in ("split_ok", "cover_partition_ok", "sample_ok"):
                if key in st:
                    part_total += 1
                    part_fail += not st[key]
        rate = part_fail / part_total if part_total else 0.0
        why = ""
        if failures:
            why = "invariant failures"
        elif rate > spec.max_failure_rate:
            why = "resample budget exhausted too often"
        cells.append(
            {
                "params": params,
                "runs": len(mine),
                "mean_coverage": statistics.mean(covs) if covs else float("nan"),
                "sd_coverage": statistics.pstdev(covs) if len(covs) > 1 else 0.0,
                "failure_rate": failures / len(mine) if mine else 0.0,
                "partition_failure_rate": rate,
                "excluded": bool(why),
                "why": why,
            }
        )
    ok = [c for c in cells if not c["excluded"]]
    best = max(ok, key=lambda c: c["mean_coverage"])["params"] if ok else None
    return CalibrationReport(best, cells)
