"""Command line interface.

Exit codes: 0 success, 1 invariant failure, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .finder import BudgetExhausted, FinderBudget, find_subdivision
from .generators import (
    GenerationTimeout,
    GenSpec,
    InfeasibleDegreeSequence,
    InvalidDegree,
    UnknownName,
    gen_lower_bound_gadget,
    generate,
)
from .graph_core import (
    GraphError,
    GraphFormatError,
    dump_packing,
    read_edge_list,
    validate_packing,
    witness_to_dict,
    write_edge_list,
)
from .oracle import LimitsExceeded, OracleLimits, enumerate_subdivisions, optimal_packing
from .packer import PackerConfig, PipelineStageFailed, pack_full

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2

# flag name -> PackerConfig field
PACK_FLAGS = {
    "p": "p", "m": "m", "epsilon": "epsilon", "gamma": "gamma", "eta": "eta",
    "u_prime": "u_prime_fraction", "seed": "seed", "max_rounds": "max_outer_rounds",
}


class UsageError(Exception):
    pass


def _parse_gen(text: str) -> GenSpec:
    """``random_regular:n=1000,d=32,seed=1``, ``gadget:d=4`` or ``named:petersen``."""
    kind, _, rest = text.partition(":")
    if kind == "named":
        return GenSpec("named", named_id=rest)
    kw = {}
    for part in filter(None, rest.split(",")):
        k, eq, v = part.partition("=")
        if not eq or k not in ("n", "d", "seed"):
            raise UsageError(f"--gen: cannot parse {part!r}")
        kw[k] = int(v)
    return GenSpec(kind, **kw)


def _load_graph(args):
    if getattr(args, "graph", None):
        return read_edge_list(args.graph)
    if getattr(args, "gen", None):
        return generate(_parse_gen(args.gen))
    raise UsageError("one of --graph or --gen is required")


def _pattern(args):
    name, *rest = args.pattern
    if len(rest) > 1 or (rest and name != "custom"):
        raise UsageError(f"--pattern: unexpected arguments {rest}")
    if name == "custom":
        path = rest[0] if rest else args.pattern_file
        if not path:
            raise UsageError("--pattern custom needs a pattern edge-list file")
        return harness.resolve_pattern("custom", path)
    return harness.resolve_pattern(name)


def _packer_config(args) -> PackerConfig:
    doc = harness.load_config(args.config) if getattr(args, "config", None) else {}
    params = dict(doc.get("packer", doc))
    for flag, name in PACK_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            params[name] = val
    allowed = {f for f in PackerConfig.__dataclass_fields__}
    for k in params:
        if k not in allowed or k == "finder":
            raise harness.ConfigError(f"packer.{k}", "unknown key")
    try:
        return PackerConfig(**params)
    except (TypeError, ValueError) as exc:
        raise harness.ConfigError("packer", str(exc)) from exc


# --------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    if args.kind == "gadget":
        g, (u, v) = gen_lower_bound_gadget(args.d, block=args.block)
        print(f"marked vertices: {u} {v}", file=sys.stderr)
    else:
        spec = GenSpec(args.kind, args.n, args.d, args.seed, args.name or "")
        g = generate(spec)
    if args.out:
        write_edge_list(g, args.out)
    else:
        from .graph_core import format_edge_list

        sys.stdout.write(format_edge_list(g))
    return EXIT_OK


def cmd_pack(args) -> int:
    g = _load_graph(args)
    F = _pattern(args)
    cfg = _packer_config(args)
    packing = pack_full(g, F, cfg)
    report = validate_packing(g, packing)
    reasons = list(report.reasons)
    if packing.trace:
        reasons += harness.check_members(packing, packing.trace["W"], packing.trace["paths"], packing.trace["m"])
    text = dump_packing(packing, F)
    if args.out:
        Path(args.out).write_text(text)
    if args.stats:
        row = {
            "n": g.n, "d": round(g.average_degree(), 6), "pattern": F.name, "p": cfg.p, "m": cfg.m,
            "eps": cfg.epsilon, "gamma": cfg.gamma, "seed": cfg.seed, "coverage": report.coverage,
            "rounds": packing.stats.get("rounds", 0), "J_final": packing.stats.get("J_final", 0),
            "aux_density": float(packing.stats.get("aux_density", 0.0)), "witnesses": len(packing.witnesses),
            "wall_ms": 0, "all_invariants_ok": not reasons,
        }
        harness.write_csv([row], args.stats, include_timing=False)
    print(f"coverage {report.coverage:.6f} witnesses {len(packing.witnesses)}")
    if reasons:
        print("invariant failures: " + ", ".join(reasons), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_find(args) -> int:
    g = _load_graph(args)
    F = _pattern(args).core_pattern()
    budget = FinderBudget(node_budget=args.budget, strategy=args.strategy)
    try:
        w = find_subdivision(g, F, budget)
    except BudgetExhausted:
        print("UNKNOWN")
        return EXIT_OK
    if not w:
        print("NOT_FOUND" if w.certified else "NOT_FOUND (uncertified)")
        return EXIT_OK
    print(json.dumps(witness_to_dict(w), sort_keys=True))
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = _load_graph(args)
    F = _pattern(args)
    limits = OracleLimits(max_n=args.max_n, max_pattern_edges=args.max_pattern_edges)
    out = {"n": g.n, "pattern": F.name}
    core = F.core_pattern()
    if core.num_edges:
        found = enumerate_subdivisions(g, core, limits, limit=args.limit)
        out["subdivisions"] = len(found)
        out["complete"] = args.limit is None or len(found) < args.limit
    opt = optimal_packing(g, F, limits)
    out["optimal_covered"] = opt.covered
    out["optimal_coverage"] = round(opt.coverage, 6)
    out["search_nodes"] = opt.nodes
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _spec_from_args(args) -> harness.ExperimentSpec:
    doc = harness.load_config(args.config)
    if args.out:
        doc["out_csv"] = args.out
    if getattr(args, "packings", None):
        doc["packings_dir"] = args.packings
    if args.repetitions is not None:
        doc["repetitions"] = args.repetitions
    if args.seed_base is not None:
        doc["seed_base"] = args.seed_base
    return harness.ExperimentSpec.from_dict(doc)


def cmd_experiment(args) -> int:
    spec = _spec_from_args(args)
    rows = harness.run_experiment(spec, workers=args.workers)
    if not spec.out_csv:
        sys.stdout.write(harness.write_csv(rows))
    bad = sum(not r["all_invariants_ok"] for r in rows)
    print(f"{len(rows)} runs, {bad} with invariant failures", file=sys.stderr)
    return EXIT_INVARIANT if bad else EXIT_OK


def cmd_calibrate(args) -> int:
    spec = _spec_from_args(args)
    rep = harness.calibrate(spec, workers=args.workers)
    if args.report:
        Path(args.report).write_text(rep.table())
    else:
        sys.stderr.write(rep.table())
    print(json.dumps({"recommended": rep.best}, sort_keys=True))
    return EXIT_OK if rep.best is not None else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tfpack", description="Pack vertex-disjoint pattern subdivisions into graphs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a graph as an edge list")
    g.add_argument("--kind", choices=["random_regular", "gadget", "named"], default="random_regular")
    g.add_argument("--n", type=int, default=0)
    g.add_argument("--d", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name", help="catalog id for --kind named")
    g.add_argument("--block", choices=["matching", "hamilton"], default="matching")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    def graph_args(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--graph", help="edge-list file")
        src.add_argument("--gen", help="e.g. random_regular:n=1000,d=32,seed=1")
        p.add_argument("--pattern", nargs="+", default=["C3"], metavar="ID",
                       help="pattern id (K4, C3, C4, K4-e, K4+K1, ...) or 'custom FILE'")
        p.add_argument("--pattern-file", help="edge list of a custom pattern")

    p = sub.add_parser("pack", help="pack subdivisions and validate the result")
    graph_args(p)
    p.add_argument("--config", help="JSON or YAML document with packer settings")
    for flag, typ in (("p", float), ("m", int), ("epsilon", float), ("gamma", float), ("eta", float),
                      ("u-prime", float), ("seed", int), ("max-rounds", int)):
        p.add_argument(f"--{flag}", type=typ, dest=flag.replace("-", "_"))
    p.add_argument("--out", help="packing JSON")
    p.add_argument("--stats", help="one-row CSV")
    p.set_defaults(func=cmd_pack)

    f = sub.add_parser("find-subdiv", help="search one subdivision")
    graph_args(f)
    f.add_argument("--strategy", choices=["exhaustive", "dense_greedy", "auto"], default="auto")
    f.add_argument("--budget", type=int, default=1_000_000)
    f.set_defaults(func=cmd_find)

    o = sub.add_parser("oracle", help="brute-force ground truth for tiny graphs")
    graph_args(o)
    o.add_argument("--limit", type=int, help="stop enumerating after this many subdivisions")
    o.add_argument("--max-n", type=int, default=12)
    o.add_argument("--max-pattern-edges", type=int, default=6)
    o.set_defaults(func=cmd_oracle)

    for name, func, helptext in (("experiment", cmd_experiment, "run an experiment spec"),
                                 ("calibrate", cmd_calibrate, "grid search over packer settings")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--config", required=True, help="experiment spec (JSON or YAML)")
        e.add_argument("--out", help="CSV output")
        e.add_argument("--repetitions", type=int)
        e.add_argument("--seed-base", type=int)
        e.add_argument("--workers", type=int, help=f"worker processes (default ${harness.THREADS_ENV} or 1)")
        if name == "experiment":
            e.add_argument("--packings", help="directory for packing JSON files")
        else:
            e.add_argument("--report", help="per-cell report CSV")
        e.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (harness.ConfigError, UsageError, GraphFormatError, GraphError, OSError, UnknownName,
            InfeasibleDegreeSequence, InvalidDegree, LimitsExceeded, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (PipelineStageFailed, GenerationTimeout, AssertionError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
