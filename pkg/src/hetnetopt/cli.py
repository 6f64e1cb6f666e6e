"""Command-line interface.

Verbs:

- ``generate``: write a scenario JSON from a config (TOML/JSON) or defaults.
- ``solve``: evaluate one policy (ZO/MO/NL/OO or an explicit offset file)
  on one scenario, writing a solve report and optionally a search trace.
- ``sweep``: the full seeded experiment; writes delimited results, a
  summary, and report figures into an output directory.
- ``reduce``: build the hardness gadget from a graph edge list, compare
  the exhaustive offset optimum against the brute-force MIS oracle, and
  check the analytic power bounds.

Solver tolerance overrides are accepted by every verb that solves.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

from .association import DEFAULT_LEVELS, OffsetVector, all_max, all_zero
from .coupling import SolverSettings
from .experiments import (DEFAULT_DEMANDS, POLICIES, ExperimentSpec,
                          export_rows, run_sweep, summarize)
from .reduction import (build_gadget, exhaustive_offset_search, load_graph,
                        mis_bruteforce, verify_bounds)
from .scenario import Scenario, ScenarioConfig, generate_scenario
from .tabu import Evaluator, TsoConfig, optimize, write_trace

__all__ = ["main"]


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver tolerances")
    group.add_argument("--outer-tol", type=float, default=None,
                       help="sweep convergence tolerance (relative)")
    group.add_argument("--inner-floor", type=float, default=None,
                       help="per-cell bisection tolerance floor (relative)")
    group.add_argument("--max-sweeps", type=int, default=None)
    group.add_argument("--power-ceiling", type=float, default=None,
                       help="divergence cap in mW")
    group.add_argument("--divergence-factor", type=float, default=None,
                       help="divergence cap as a multiple of a power limit")


def _solver_from_args(args) -> SolverSettings:
    settings = SolverSettings()
    overrides = {name: getattr(args, name) for name in
                 ("outer_tol", "inner_floor", "max_sweeps", "power_ceiling",
                  "divergence_factor") if getattr(args, name) is not None}
    return replace(settings, **overrides) if overrides else settings


def _load_config(path: str | None, args) -> ScenarioConfig:
    config = (ScenarioConfig.from_file(path) if path else ScenarioConfig())
    overrides = {}
    for arg_name, field_name in (
            ("seed", "rng_seed"), ("demand", "demand_bps"),
            ("sites", "num_macro_sites"), ("lpns_per_site", "lpns_per_site"),
            ("ues_per_site", "ues_per_site"),
            ("isd", "inter_site_distance_m")):
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[field_name] = value
    return replace(config, **overrides) if overrides else config


def _parse_levels(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


def _json_num(x: float):
    return None if (x is None or math.isinf(x) or math.isnan(x)) else x


def _cmd_generate(args) -> int:
    config = _load_config(args.config, args)
    scenario = generate_scenario(config)
    scenario.to_json(args.out)
    print(f"wrote {args.out}: {scenario.num_cells} cells "
          f"({len(scenario.macro_ids)} macros, {scenario.num_lpns} LPNs), "
          f"{scenario.num_ues} UEs, seed {config.rng_seed}")
    return 0


def _offset_vector_for(args, scenario) -> OffsetVector | None:
    levels = _parse_levels(args.levels)
    if args.offsets:
        return OffsetVector.from_json(args.offsets)
    if args.policy == "ZO":
        return all_zero(levels, scenario.num_lpns)
    if args.policy == "MO":
        return all_max(levels, scenario.num_lpns)
    return None  # NL and OO handled by the caller


def _cmd_solve(args) -> int:
    scenario = Scenario.from_json(args.scenario)
    if args.demand is not None:
        scenario = scenario.with_demand(args.demand)
    solver = _solver_from_args(args)
    evaluator = Evaluator(scenario, solver)
    report: dict = {"scenario": str(args.scenario), "policy": args.policy}

    t0 = time.perf_counter()
    if args.policy == "OO" and not args.offsets:
        config = TsoConfig(levels=_parse_levels(args.levels),
                           alpha=args.alpha, beta=args.beta, solver=solver)
        tso = optimize(scenario, config, evaluator=evaluator)
        if args.trace:
            write_trace(args.trace, tso.trace)
        record = tso.best_record
        report["tso"] = {
            "feasible_found": tso.feasible_found,
            "iterations": tso.num_iterations,
            "unique_evals": tso.num_unique_evals,
        }
        if not tso.feasible_found:
            print("no feasible offset vector found", file=sys.stderr)
    elif args.policy == "NL" and not args.offsets:
        record = evaluator.evaluate_nl()
    else:
        record = evaluator.evaluate(_offset_vector_for(args, scenario))
    elapsed = time.perf_counter() - t0

    result = record.result
    report.update({
        "energy_mw": _json_num(record.objective),
        "feasible": record.feasible,
        "converged": result.converged,
        "num_sweeps": result.num_sweeps,
        "residual": result.residual,
        "offsets_db": (None if record.offsets is None else
                       [_json_num(v) for v in record.offsets.values]),
        "serving": [int(c) for c in record.serving],
        "powers_mw": [float(p) for p in result.powers],
        "loads": [float(v) for v in result.loads],
        "wall_time_s": elapsed,
    })
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1) + "\n")
    energy = record.objective
    print(f"{args.policy}: energy="
          f"{'inf' if math.isinf(energy) else f'{energy:.6g} mW'} "
          f"feasible={record.feasible} sweeps={result.num_sweeps}")
    return 0 if record.feasible else 3


def _cmd_sweep(args) -> int:
    solver = _solver_from_args(args)
    tso = TsoConfig(levels=_parse_levels(args.levels), alpha=args.alpha,
                    beta=args.beta, solver=solver)
    spec_kwargs = dict(
        demands_bps=_parse_floats(args.demands),
        policies=tuple(args.policies.split(",")),
        num_seeds=args.seeds, base_seed=args.base_seed,
        tso=tso, solver=solver)
    if args.scenario:
        spec = ExperimentSpec(scenario_config=None,
                              scenario_path=args.scenario, **spec_kwargs)
        num_macros = len(Scenario.from_json(args.scenario).macro_ids)
    else:
        config = _load_config(args.config, args)
        spec = ExperimentSpec(scenario_config=config, **spec_kwargs)
        num_macros = config.num_macro_sites

    rows = run_sweep(spec, workers=args.workers)
    summary = summarize(rows)
    paths = export_rows(rows, args.out_dir, summary)
    if args.figures:
        import matplotlib
        matplotlib.use("Agg")
        from .plots import render_sweep_figures
        paths["figures"] = render_sweep_figures(rows, summary, args.out_dir,
                                                num_macros=num_macros)
    for entry in summary["improvements"]:
        if entry["demand_bps"] is None and entry["mean_improvement_pct"]:
            print(f"{entry['better']} vs {entry['baseline']}: "
                  f"{entry['mean_improvement_pct']:.1f}% mean improvement")
    feasible_rows = sum(r.feasible for r in rows)
    print(f"{len(rows)} rows ({feasible_rows} feasible) -> "
          + ", ".join(str(p) for k, p in paths.items() if k != "figures"))
    if args.figures and paths.get("figures"):
        print("figures: " + ", ".join(str(p) for p in paths["figures"]))
    return 0


def _cmd_reduce(args) -> int:
    graph = load_graph(args.graph, num_nodes=args.nodes)
    gadget = build_gadget(graph, args.epsilon)
    solver = _solver_from_args(args)

    mis_size, mis_set = mis_bruteforce(graph)
    search = exhaustive_offset_search(gadget, solver)
    active = sorted(search.active_set)
    independent = graph.is_independent(active)
    sizes_match = len(active) == mis_size
    bounds = [verify_bounds(gadget, k) for k in range(graph.num_nodes)]
    bounds_hold = all(b.holds for b in bounds)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gadget.scenario.to_json(out_dir / "gadget_scenario.json")
    search.best_offsets.to_json(out_dir / "optimal_offsets.json")
    report = {
        "graph": {"num_nodes": graph.num_nodes,
                  "edges": [list(e) for e in graph.edges]},
        "epsilon": gadget.epsilon,
        "mis_size": mis_size,
        "mis_nodes": sorted(mis_set),
        "optimum_active_lpns": active,
        "optimum_energy": search.best_record.objective,
        "active_set_independent": independent,
        "sizes_match": sizes_match,
        "patterns_evaluated": search.num_evaluated,
        "patterns_feasible": search.num_feasible,
        "bounds": [{"k": b.num_active, "lower_at_k": b.lower_at_k,
                    "upper_at_k_plus_1": b.upper_at_k_plus_1,
                    "holds": b.holds} for b in bounds],
        "bounds_hold": bounds_hold,
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=1) + "\n")

    print(f"MIS size {mis_size} {sorted(mis_set)}; optimum activates "
          f"{active} (independent={independent}, sizes_match={sizes_match})")
    print(f"bound check P(k+1) < P(k) for all k: {bounds_hold}")
    print(f"wrote {out_dir / 'report.json'}")
    return 0 if (independent and sizes_match and bounds_hold) else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetnetopt",
        description=("Load-coupled HetNet energy optimization: full-load "
                     "power solving, offset search, experiments, and the "
                     "MIS hardness gadget."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a scenario JSON")
    p.add_argument("--config", help="ScenarioConfig TOML/JSON file")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--demand", type=float, help="override demand (bps)")
    p.add_argument("--sites", type=int, help="override macro site count")
    p.add_argument("--lpns-per-site", type=int)
    p.add_argument("--ues-per-site", type=int)
    p.add_argument("--isd", type=float, help="inter-site distance (m)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="evaluate one policy on one scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--policy", choices=POLICIES, default="ZO")
    p.add_argument("--offsets", help="explicit OffsetVector JSON "
                                     "(overrides --policy)")
    p.add_argument("--demand", type=float, help="override all demands (bps)")
    p.add_argument("--levels", default=",".join(
        str(v) for v in DEFAULT_LEVELS), help="comma list of offset dB")
    p.add_argument("--alpha", type=int, help="search patience")
    p.add_argument("--beta", type=int, help="tabu tenure")
    p.add_argument("--trace", help="write the OO search trace (JSONL)")
    p.add_argument("--out", help="write a solve report JSON")
    _add_solver_args(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("sweep", help="run the seeded demand sweep")
    p.add_argument("--config", help="ScenarioConfig TOML/JSON file")
    p.add_argument("--scenario", help="fixed scenario JSON instead of "
                                      "per-seed generation")
    p.add_argument("--seed", type=int, help="override config rng_seed")
    p.add_argument("--demand", type=float, help=argparse.SUPPRESS)
    p.add_argument("--demands", default=",".join(
        str(d) for d in DEFAULT_DEMANDS), help="comma list of demands (bps)")
    p.add_argument("--policies", default=",".join(POLICIES))
    p.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--levels", default=",".join(
        str(v) for v in DEFAULT_LEVELS))
    p.add_argument("--alpha", type=int)
    p.add_argument("--beta", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction,
                   default=True, help="render report figures")
    _add_solver_args(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("reduce", help="graph -> gadget -> verify")
    p.add_argument("--graph", required=True, help="edge-list file (u v)")
    p.add_argument("--nodes", type=int, help="node count override")
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--out-dir", required=True)
    _add_solver_args(p)
    p.set_defaults(func=_cmd_reduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
