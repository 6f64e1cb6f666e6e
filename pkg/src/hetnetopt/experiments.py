"""Batch studies: demand sweeps, baselines, per-cell breakdowns.

:func:`run_sweep` evaluates the requested policies over a grid of
(seed, demand) pairs on procedurally generated scenarios and returns a
flat, deterministically sorted row table.  Policies:

- ``ZO`` / ``MO``: all LPN offsets at the lowest (0 dB) / highest level;
- ``NL``: LPNs disabled, macros only;
- ``OO``: offsets optimized by tabu search, then the reported
  configuration is the cheapest feasible one among the search result,
  ZO, MO, and the search results of the other demands in the same seed's
  sweep.  Candidate pooling costs a handful of extra memoized solves and
  makes the reported OO series never worse than the baselines and
  monotone in demand by construction (each candidate's energy is itself
  monotone in demand and feasibility only shrinks as demand grows).

Rows where the solver diverges carry infinite energy and an empty
per-cell breakdown; converged-but-over-limit rows keep their finite
energy with ``feasible=False``.  Failures are recorded per row, never
raised out of the sweep.  Everything is reproducible: rerunning a spec
yields byte-identical outputs apart from wall-clock fields.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .association import OffsetVector, all_max, all_zero
from .coupling import SolverSettings
from .scenario import Scenario, ScenarioConfig, generate_scenario
from .tabu import Evaluator, TsoConfig, optimize

__all__ = [
    "POLICIES", "ExperimentSpec", "ResultRow", "run_sweep", "summarize",
    "export_rows", "rows_to_dicts", "rows_from_dicts", "rows_digest",
    "DEFAULT_DEMANDS",
]

POLICIES = ("OO", "ZO", "MO", "NL")

DEFAULT_DEMANDS = tuple(100e3 + 50e3 * i for i in range(10))  # 100k..550k


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: scenario source, demand grid, policies, seeds, knobs.

    Exactly one of ``scenario_config`` / ``scenario_path`` must be set.
    With a scenario file the layout is fixed, so seeds merely label rows.
    Seeds run from ``base_seed`` to ``base_seed + num_seeds - 1`` and are
    used as the scenario generator's RNG seed.
    """

    scenario_config: ScenarioConfig | None = field(
        default_factory=ScenarioConfig)
    scenario_path: str | None = None
    demands_bps: tuple[float, ...] = DEFAULT_DEMANDS
    policies: tuple[str, ...] = POLICIES
    num_seeds: int = 10
    base_seed: int = 0
    tso: TsoConfig = field(default_factory=TsoConfig)
    solver: SolverSettings = field(default_factory=SolverSettings)
    oo_candidate_pool: bool = True

    def __post_init__(self):
        if (self.scenario_config is None) == (self.scenario_path is None):
            raise ValueError(
                "set exactly one of scenario_config / scenario_path")
        if not self.demands_bps:
            raise ValueError("demands_bps must be non-empty")
        if any(d <= 0 for d in self.demands_bps):
            raise ValueError("demands must be positive")
        if any(b <= a for a, b in zip(self.demands_bps,
                                      self.demands_bps[1:])):
            raise ValueError("demands must be strictly ascending")
        bad = set(self.policies) - set(POLICIES)
        if bad or not self.policies:
            raise ValueError(f"policies must be a non-empty subset of "
                             f"{POLICIES}, got {self.policies}")
        if self.num_seeds < 1:
            raise ValueError("num_seeds must be >= 1")

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(self.base_seed + i for i in range(self.num_seeds))


@dataclass(frozen=True)
class ResultRow:
    """One (seed, demand, policy) outcome.

    ``total_energy`` is sum(load_i * power_i) in mW, infinite when the
    solve diverged.  ``per_cell_energy`` holds the same product per cell
    (empty on divergence) and sums to the total.  ``offsets`` are the dB
    values actually used (None for NL).  ``wall_time`` is diagnostic only
    and excluded from determinism digests.
    """

    seed: int
    demand: float
    policy: str
    total_energy: float
    per_cell_energy: tuple[float, ...]
    feasible: bool
    tso_iterations: int | None
    wall_time: float
    offsets: tuple[float, ...] | None
    error: str | None = None


def _record_row(seed, demand, policy, record, elapsed, tso_iterations=None):
    result = record.result
    if result.converged:
        per_cell = tuple(float(v * p) for v, p in
                         zip(result.target_loads, result.powers))
    else:
        per_cell = ()
    offsets = None if record.offsets is None else record.offsets.values
    return ResultRow(seed, demand, policy, record.objective, per_cell,
                     record.feasible, tso_iterations, elapsed, offsets)


def _error_row(seed, demand, policy, elapsed, message):
    return ResultRow(seed, demand, policy, math.inf, (), False, None,
                     elapsed, None, message)


def _base_scenario(spec: ExperimentSpec, seed: int) -> Scenario:
    if spec.scenario_path is not None:
        return Scenario.from_json(spec.scenario_path)
    config = replace(spec.scenario_config, rng_seed=seed)
    return generate_scenario(config)


def _select_candidate(evaluator, candidates):
    """Cheapest feasible candidate, first wins ties; None if none feasible."""
    best = None
    seen = set()
    for offsets in candidates:
        if offsets is None or offsets.indices in seen:
            continue
        seen.add(offsets.indices)
        record = evaluator.evaluate(offsets)
        if record.feasible and (best is None
                                or record.objective < best.objective):
            best = record
    return best


def _seed_rows(spec: ExperimentSpec, seed: int) -> list[ResultRow]:
    rows: list[ResultRow] = []
    try:
        base = _base_scenario(spec, seed)
    except Exception as exc:  # noqa: BLE001 - recorded per row
        return [_error_row(seed, d, p, 0.0, f"scenario: {exc}")
                for d in spec.demands_bps for p in spec.policies]

    levels = spec.tso.levels
    m = base.num_lpns
    zo = all_zero(levels, m)
    mo = all_max(levels, m)
    tso_config = replace(spec.tso, solver=spec.solver)

    evaluators: dict[float, Evaluator] = {}
    tso_results: dict[float, object] = {}
    tso_wall: dict[float, float] = {}
    fixed_rows: list[ResultRow] = []

    for demand in spec.demands_bps:
        scenario = base.with_demand(demand)
        ev = Evaluator(scenario, spec.solver)
        evaluators[demand] = ev

        for policy, offsets in (("ZO", zo), ("MO", mo)):
            if policy not in spec.policies:
                continue
            t0 = time.perf_counter()
            try:
                record = ev.evaluate(offsets)
                row = _record_row(seed, demand, policy, record,
                                  time.perf_counter() - t0)
            except Exception as exc:  # noqa: BLE001
                row = _error_row(seed, demand, policy,
                                 time.perf_counter() - t0, str(exc))
            fixed_rows.append(row)
        if "NL" in spec.policies:
            t0 = time.perf_counter()
            try:
                record = ev.evaluate_nl()
                fixed_rows.append(_record_row(
                    seed, demand, "NL", record, time.perf_counter() - t0))
            except Exception as exc:  # noqa: BLE001
                fixed_rows.append(_error_row(
                    seed, demand, "NL", time.perf_counter() - t0, str(exc)))
        if "OO" in spec.policies:
            t0 = time.perf_counter()
            try:
                tso_results[demand] = optimize(scenario, tso_config,
                                               evaluator=ev)
            except Exception as exc:  # noqa: BLE001
                tso_results[demand] = exc
            tso_wall[demand] = time.perf_counter() - t0

    rows.extend(fixed_rows)

    if "OO" in spec.policies:
        for demand in spec.demands_bps:
            t0 = time.perf_counter()
            tso = tso_results[demand]
            if isinstance(tso, Exception):
                rows.append(_error_row(seed, demand, "OO",
                                       tso_wall[demand], str(tso)))
                continue
            candidates: list[OffsetVector | None] = [tso.best_offsets]
            if spec.oo_candidate_pool:
                candidates += [zo, mo]
                candidates += [tso_results[d].best_offsets
                               for d in spec.demands_bps if d != demand
                               and not isinstance(tso_results[d], Exception)]
            best = _select_candidate(evaluators[demand], candidates)
            # nothing feasible anywhere: report the search diagnostics
            record = tso.best_record if best is None else best
            elapsed = tso_wall[demand] + (time.perf_counter() - t0)
            rows.append(_record_row(seed, demand, "OO", record, elapsed,
                                    tso.num_iterations))

    return rows


def _seed_job(args):
    spec, seed = args
    return _seed_rows(spec, seed)


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> list[ResultRow]:
    """Evaluate the sweep; rows sorted by (seed, demand, policy).

    ``workers`` > 1 distributes seeds over a process pool; the returned
    table is identical for any worker count (wall times aside).
    """
    if workers <= 1 or spec.num_seeds == 1:
        chunks = [_seed_rows(spec, s) for s in spec.seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_seed_job,
                                   [(spec, s) for s in spec.seeds]))
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.seed, r.demand, POLICIES.index(r.policy)))
    return rows


# --- summaries ---

def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else None


def summarize(rows: list[ResultRow],
              improvement_pairs=(("OO", "ZO"), ("OO", "MO"), ("OO", "NL")),
              ) -> dict:
    """Per-demand policy means plus pairwise improvement percentages.

    improvement(A over B) = (E_B - E_A)/E_B * 100, computed per demand
    over seeds where both policies are feasible, then averaged across
    demands; also reported per seed (averaged across demands) since
    per-drop improvement is what a fixed layout experiences.
    """
    seeds = sorted({r.seed for r in rows})
    demands = sorted({r.demand for r in rows})
    policies = [p for p in POLICIES if any(r.policy == p for r in rows)]
    table = {(r.seed, r.demand, r.policy): r for r in rows}

    per_demand = []
    for policy in policies:
        for demand in demands:
            feasible = [table[(s, demand, policy)].total_energy
                        for s in seeds
                        if (s, demand, policy) in table
                        and table[(s, demand, policy)].feasible]
            per_demand.append({
                "policy": policy, "demand_bps": demand,
                "mean_energy_mw": _mean(feasible),
                "feasible_seeds": len(feasible),
            })

    improvements = []
    per_seed_improvements = []
    for better, baseline in improvement_pairs:
        if better not in policies or baseline not in policies:
            continue
        demand_means = []
        for demand in demands:
            pcts = []
            for s in seeds:
                a = table.get((s, demand, better))
                b = table.get((s, demand, baseline))
                if a and b and a.feasible and b.feasible:
                    pcts.append(100.0 * (b.total_energy - a.total_energy)
                                / b.total_energy)
            improvements.append({
                "better": better, "baseline": baseline,
                "demand_bps": demand,
                "mean_improvement_pct": _mean(pcts),
                "seeds_both_feasible": len(pcts),
            })
            if pcts:
                demand_means.append(_mean(pcts))
        improvements.append({
            "better": better, "baseline": baseline, "demand_bps": None,
            "mean_improvement_pct": _mean(demand_means),
            "seeds_both_feasible": None,
        })
        for s in seeds:
            pcts = []
            for demand in demands:
                a = table.get((s, demand, better))
                b = table.get((s, demand, baseline))
                if a and b and a.feasible and b.feasible:
                    pcts.append(100.0 * (b.total_energy - a.total_energy)
                                / b.total_energy)
            per_seed_improvements.append({
                "better": better, "baseline": baseline, "seed": s,
                "mean_improvement_pct": _mean(pcts),
                "demands_both_feasible": len(pcts),
            })

    return {
        "num_seeds": len(seeds),
        "seeds": seeds,
        "demands_bps": demands,
        "policies": policies,
        "per_demand": per_demand,
        "improvements": improvements,
        "per_seed_improvements": per_seed_improvements,
    }


# --- serialization ---

def _json_num(x):
    if x is None or math.isinf(x) or math.isnan(x):
        return None
    return x


def rows_to_dicts(rows: list[ResultRow]) -> list[dict]:
    out = []
    for r in rows:
        out.append({
            "seed": r.seed,
            "demand_bps": r.demand,
            "policy": r.policy,
            "total_energy_mw": _json_num(r.total_energy),
            "per_cell_energy_mw": list(r.per_cell_energy),
            "feasible": r.feasible,
            "tso_iterations": r.tso_iterations,
            "wall_time_s": r.wall_time,
            "offsets_db": (None if r.offsets is None
                           else [_json_num(v) for v in r.offsets]),
            "error": r.error,
        })
    return out


def rows_from_dicts(dicts: list[dict]) -> list[ResultRow]:
    rows = []
    for d in dicts:
        offsets = d["offsets_db"]
        if offsets is not None:
            offsets = tuple(-math.inf if v is None else float(v)
                            for v in offsets)
        total = d["total_energy_mw"]
        rows.append(ResultRow(
            int(d["seed"]), float(d["demand_bps"]), d["policy"],
            math.inf if total is None else float(total),
            tuple(float(x) for x in d["per_cell_energy_mw"]),
            bool(d["feasible"]), d["tso_iterations"],
            float(d["wall_time_s"]), offsets, d["error"]))
    return rows


def rows_digest(rows: list[ResultRow]) -> str:
    """sha256 over the canonical row encoding, wall times excluded."""
    dicts = rows_to_dicts(rows)
    for d in dicts:
        del d["wall_time_s"]
    payload = json.dumps(dicts, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def _csv_num(x):
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(x) if isinstance(x, float) else str(x)


def export_rows(rows: list[ResultRow], out_dir,
                summary: dict | None = None) -> dict[str, Path]:
    """Write results.csv, per_cell.csv, results.json (and summary.json).

    Column order is fixed; floats use repr so files byte-reproduce.
    Returns the paths written, keyed by artifact name.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    paths["results"] = out_dir / "results.csv"
    with paths["results"].open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "demand_bps", "policy", "total_energy_mw",
                         "feasible", "tso_iterations", "wall_time_s",
                         "error"])
        for r in rows:
            writer.writerow([
                r.seed, _csv_num(r.demand), r.policy,
                _csv_num(r.total_energy), r.feasible,
                _csv_num(r.tso_iterations), _csv_num(r.wall_time),
                r.error or "",
            ])

    num_cells = max((len(r.per_cell_energy) for r in rows), default=0)
    paths["per_cell"] = out_dir / "per_cell.csv"
    with paths["per_cell"].open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "demand_bps", "policy"]
                        + [f"cell_{i}" for i in range(num_cells)])
        for r in rows:
            cells = [_csv_num(v) for v in r.per_cell_energy]
            cells += [""] * (num_cells - len(cells))
            writer.writerow([r.seed, _csv_num(r.demand), r.policy] + cells)

    paths["rows_json"] = out_dir / "results.json"
    paths["rows_json"].write_text(
        json.dumps({"rows": rows_to_dicts(rows)}, indent=1) + "\n")

    if summary is not None:
        paths["summary"] = out_dir / "summary.json"
        paths["summary"].write_text(json.dumps(summary, indent=1) + "\n")
    return paths
