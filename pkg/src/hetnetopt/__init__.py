"""Energy optimization for load-coupled heterogeneous cellular networks.

The package models downlink networks in which every cell's load depends
on every other cell's transmit power through interference. It provides:

- scenario generation (hexagonal macro layout, low-power nodes, users,
  empirical path loss with log-normal shadowing),
- biased user association via per-LPN dB offsets,
- a fixed-point solver for the minimal transmit powers that sustain the
  full-load operating point,
- a tabu search over discrete offset levels that minimizes total
  transmission energy,
- a reduction that embeds maximum-independent-set instances into offset
  optimization, certifying the problem's hardness,
- a seeded experiment harness comparing offset policies across demand
  levels, with delimited output and report figures.
"""

from .association import (DEFAULT_LEVELS, OffsetVector, active_cells,
                          all_max, all_zero, associate, served_by)
from .coupling import (FEASIBILITY_REL_SLACK, SolveResult, SolverSettings,
                       cell_loads, check_feasible, energy, result_energy,
                       sinr, solve_power)
from .experiments import (DEFAULT_DEMANDS, POLICIES, ExperimentSpec,
                          ResultRow, export_rows, rows_digest,
                          rows_from_dicts, rows_to_dicts, run_sweep,
                          summarize)
from .reduction import (GADGET_LEVELS, BoundCheck, ExhaustiveResult,
                        GadgetInstance, Graph, active_lpns, build_gadget,
                        exhaustive_offset_search, load_graph,
                        mis_bruteforce, pattern_power_bounds, save_graph,
                        verify_bounds)
from .scenario import (Cell, CellKind, Scenario, ScenarioConfig,
                       UserEquipment, generate_scenario, linear_gain,
                       noise_per_resource_unit, path_loss_db, site_centers)
from .tabu import (EvalRecord, Evaluator, TraceEntry, TsoConfig, TsoResult,
                   evaluate_baselines, neighborhood, optimize, write_trace)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_LEVELS", "OffsetVector", "active_cells", "all_max", "all_zero",
    "associate", "served_by",
    "FEASIBILITY_REL_SLACK", "SolveResult", "SolverSettings", "cell_loads",
    "check_feasible", "energy", "result_energy", "sinr", "solve_power",
    "DEFAULT_DEMANDS", "POLICIES", "ExperimentSpec", "ResultRow",
    "export_rows", "rows_digest", "rows_from_dicts", "rows_to_dicts",
    "run_sweep", "summarize",
    "GADGET_LEVELS", "BoundCheck", "ExhaustiveResult", "GadgetInstance",
    "Graph", "active_lpns", "build_gadget", "exhaustive_offset_search",
    "load_graph", "mis_bruteforce", "pattern_power_bounds", "save_graph",
    "verify_bounds",
    "Cell", "CellKind", "Scenario", "ScenarioConfig", "UserEquipment",
    "generate_scenario", "linear_gain", "noise_per_resource_unit",
    "path_loss_db", "site_centers",
    "EvalRecord", "Evaluator", "TraceEntry", "TsoConfig", "TsoResult",
    "evaluate_baselines", "neighborhood", "optimize", "write_trace",
    "__version__",
]
