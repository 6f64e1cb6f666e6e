"""Tabu search over LPN range offsets minimizing full-load sum power.

The decision variable is an :class:`~hetnetopt.association.OffsetVector`;
the objective g(x) is the transmission energy of the full-load power
solution under the association induced by x, with +inf for offset vectors
whose demand is not servable.  The search moves between neighbors that
differ by one level in one position, keeps a tabu table of recently
modified positions (tenure ``beta``), admits tabu moves that would beat
the incumbent (aspiration), and stops after ``alpha`` consecutive
iterations without improving the incumbent.

Moving to a candidate never requires feasibility: converged solutions
that violate a power limit keep their finite objective and may become
the current solution (useful for crossing infeasible ridges), but the
incumbent only ever takes feasible candidates.  The incumbent is updated
from every candidate evaluated while scanning a neighborhood, not just
the one moved to; the move rule itself is unchanged.  Evaluations are
memoized per search, so revisiting a vector is free and bit-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .association import (OffsetVector, DEFAULT_LEVELS, all_max, all_zero,
                          associate)
from .coupling import SolveResult, SolverSettings, result_energy

__all__ = [
    "TsoConfig", "EvalRecord", "Evaluator", "TraceEntry", "TsoResult",
    "neighborhood", "optimize", "evaluate_baselines", "write_trace",
]


@dataclass(frozen=True)
class TsoConfig:
    """Search knobs.

    ``alpha`` (non-improvement patience) defaults to 10*m and ``beta``
    (tabu tenure) to ceil(sqrt(m)), with m the LPN count.  ``init``
    selects the starting vector: "zero" (all LPNs at the 0 dB level,
    deterministic) or "random" (uniform levels drawn from ``rng_seed``).
    ``hopeless_iterations``, when set, aborts the search early once that
    many iterations have passed without a single evaluation converging;
    it trades completeness for speed on unservable demands and is off by
    default (convergence can first appear far from the start point).
    ``best_from_candidates=False`` restores the narrower rule where only
    the moved-to solution can become the incumbent.
    """

    levels: tuple[float, ...] = DEFAULT_LEVELS
    alpha: int | None = None
    beta: int | None = None
    init: str = "zero"
    rng_seed: int = 0
    best_from_candidates: bool = True
    hopeless_iterations: int | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if len(self.levels) < 1:
            raise ValueError("levels must contain at least one offset")
        if self.alpha is not None and self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.beta is not None and self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.init not in ("zero", "random"):
            raise ValueError("init must be 'zero' or 'random'")

    def resolved_alpha(self, num_lpns: int) -> int:
        return self.alpha if self.alpha is not None else max(1, 10 * num_lpns)

    def resolved_beta(self, num_lpns: int) -> int:
        if self.beta is not None:
            return self.beta
        return math.ceil(math.sqrt(num_lpns)) if num_lpns else 0


@dataclass(frozen=True)
class EvalRecord:
    """One offset vector fully evaluated: association, solve, objective.

    ``objective`` is finite exactly when the solve converged; ``feasible``
    additionally requires the power limits.
    """

    offsets: OffsetVector
    serving: np.ndarray
    result: SolveResult
    objective: float
    feasible: bool


class Evaluator:
    """Memoizing objective evaluator for one scenario.

    Every evaluation is cold (the solver always starts from zero power),
    so a record depends only on the offset vector; identical inputs give
    bit-identical records within and across runs.  Solves are shared
    between offset vectors that induce the same serving map (a 1 dB move
    often flips no UE at all), so the solve count tracks the number of
    distinct associations rather than distinct vectors.
    """

    def __init__(self, scenario, solver: SolverSettings | None = None):
        self.scenario = scenario
        self.solver = solver if solver is not None else SolverSettings()
        self._memo: dict[tuple[int, ...], EvalRecord] = {}
        self._by_serving: dict[bytes, tuple] = {}
        self.num_solves = 0
        self.num_converged = 0

    def evaluate(self, offsets: OffsetVector) -> EvalRecord:
        key = offsets.indices
        record = self._memo.get(key)
        if record is None:
            record = self._evaluate_serving(associate(self.scenario, offsets),
                                            offsets)
            self._memo[key] = record
        return record

    def evaluate_nl(self) -> EvalRecord:
        """Macros-only baseline; shares the serving-map solve cache."""
        serving = associate(self.scenario, None, lpn_enabled=False)
        return self._evaluate_serving(serving, None)

    def _evaluate_serving(self, serving, offsets) -> EvalRecord:
        skey = serving.tobytes()
        hit = self._by_serving.get(skey)
        if hit is None:
            result = self.solver.solve(self.scenario, serving)
            self.num_solves += 1
            if result.converged:
                self.num_converged += 1
            hit = (result, result_energy(result), result.feasible)
            self._by_serving[skey] = hit
        result, objective, feasible = hit
        return EvalRecord(offsets, serving, result, objective, feasible)


def neighborhood(x: OffsetVector) -> list[tuple[int, OffsetVector]]:
    """All (modified position, neighbor) pairs one level away from x.

    Neighbors differ from x in exactly one position by exactly one level;
    x itself is excluded.  At the level-set boundaries only the inward
    move exists.
    """
    out = []
    top = len(x.levels) - 1
    for pos, idx in enumerate(x.indices):
        if idx > 0:
            out.append((pos, x.with_index(pos, idx - 1)))
        if idx < top:
            out.append((pos, x.with_index(pos, idx + 1)))
    return out


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    moved_position: int
    candidate_energy: float
    best_energy: float
    k: int
    tabu_snapshot: tuple[int, ...]


@dataclass(frozen=True)
class TsoResult:
    """Search outcome.

    ``feasible_found`` distinguishes a proper optimum from the
    no-feasible-solution outcome; in the latter case ``best_record`` is
    the lowest-objective infeasible record seen, kept for diagnostics.
    """

    best_offsets: OffsetVector | None
    best_record: EvalRecord | None
    feasible_found: bool
    initial_record: EvalRecord | None
    trace: list[TraceEntry]
    num_iterations: int
    num_unique_evals: int

    @property
    def best_energy(self) -> float:
        if self.best_record is None:
            return math.inf
        return self.best_record.objective if self.feasible_found else math.inf

    @property
    def best_powers(self) -> np.ndarray | None:
        return None if self.best_record is None else self.best_record.result.powers


def _initial_vector(config: TsoConfig, num_lpns: int) -> OffsetVector:
    if config.init == "zero":
        return all_zero(config.levels, num_lpns)
    rng = np.random.default_rng(config.rng_seed)
    idx = rng.integers(0, len(config.levels), size=num_lpns)
    return OffsetVector(tuple(config.levels), tuple(int(i) for i in idx))


def optimize(scenario, config: TsoConfig | None = None,
             evaluator: Evaluator | None = None) -> TsoResult:
    """Run the offset search on one scenario.

    With no LPNs there is nothing to search: the macros-only evaluation
    is returned directly.  A shared ``evaluator`` may be passed to reuse
    memoized records (it must wrap the same scenario).
    """
    config = config if config is not None else TsoConfig()
    ev = evaluator if evaluator is not None else Evaluator(
        scenario, config.solver)
    m = scenario.num_lpns

    if m == 0:
        record = ev.evaluate_nl()
        return TsoResult(None, record, record.feasible, record, [], 0,
                         ev.num_solves)

    alpha = config.resolved_alpha(m)
    beta = config.resolved_beta(m)
    current = _initial_vector(config, m)
    init_rec = ev.evaluate(current)

    best: EvalRecord | None = init_rec if init_rec.feasible else None
    best_infeasible = init_rec
    tabu = [0] * m
    # objective ties (ubiquitous on plateaus where nothing converges) are
    # broken toward the least recently moved position, then toward raising
    # the offset: only larger LPN ranges can relieve overloaded macros
    last_moved = [pos - m for pos in range(m)]
    k = 0
    iteration = 0
    trace: list[TraceEntry] = []

    def _move_key(entry):
        pos, nb, rec = entry
        delta = nb.indices[pos] - current.indices[pos]
        return (rec.objective, last_moved[pos], -delta)

    while k <= alpha:
        nbrs = neighborhood(current)
        if not nbrs:
            break
        iteration += 1
        evaluated = [(pos, nb, ev.evaluate(nb)) for pos, nb in nbrs]

        # aspiration compares against the incumbent as of the scan
        incumbent = best.objective if best is not None else math.inf
        candidates = [e for e in evaluated
                      if tabu[e[0]] == 0 or e[2].objective < incumbent]
        if not candidates:
            # all tabu, none aspiring: take the nearest-to-release move
            chosen = min(evaluated, key=lambda e: (tabu[e[0]], e[2].objective))
        else:
            chosen = min(candidates, key=_move_key)
        pos, nxt, chosen_rec = chosen

        improved = False
        pool = evaluated if config.best_from_candidates else [chosen]
        for _, _, rec in pool:
            if rec.feasible and (best is None or
                                 rec.objective < best.objective):
                best = rec
                improved = True
            if rec.objective < best_infeasible.objective:
                best_infeasible = rec

        tabu[pos] = beta
        last_moved[pos] = iteration
        k = 0 if improved else k + 1
        for i in range(m):
            if tabu[i] > 0:
                tabu[i] -= 1
        current = nxt
        trace.append(TraceEntry(
            iteration, pos, chosen_rec.objective,
            best.objective if best is not None else math.inf,
            k, tuple(tabu)))

        if (config.hopeless_iterations is not None
                and iteration >= config.hopeless_iterations
                and ev.num_converged == 0):
            break

    if best is not None:
        return TsoResult(best.offsets, best, True, init_rec, trace,
                         iteration, ev.num_solves)
    return TsoResult(None, best_infeasible, False, init_rec, trace,
                     iteration, ev.num_solves)


def evaluate_baselines(scenario, levels=DEFAULT_LEVELS,
                       solver: SolverSettings | None = None,
                       evaluator: Evaluator | None = None) -> dict:
    """ZO / MO / NL reference evaluations on one scenario."""
    ev = evaluator if evaluator is not None else Evaluator(scenario, solver)
    m = scenario.num_lpns
    levels = tuple(levels)
    return {
        "ZO": ev.evaluate(all_zero(levels, m)),
        "MO": ev.evaluate(all_max(levels, m)),
        "NL": ev.evaluate_nl(),
    }


def write_trace(path, trace: list[TraceEntry]) -> None:
    """Write a search trace as JSON lines (inf rendered as null)."""
    def _num(v):
        return None if math.isinf(v) else v

    with Path(path).open("w") as fh:
        for entry in trace:
            fh.write(json.dumps({
                "iteration": entry.iteration,
                "moved_position": entry.moved_position,
                "candidate_energy": _num(entry.candidate_energy),
                "best_energy": _num(entry.best_energy),
                "k": entry.k,
                "tabu_snapshot": list(entry.tabu_snapshot),
            }) + "\n")
