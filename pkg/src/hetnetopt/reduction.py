"""Hardness gadget: offset optimization solves maximum independent set.

For an undirected graph on n nodes, :func:`build_gadget` constructs a
HetNet instance with n macros, n LPNs and n UEs in which the only
meaningful decision is which LPNs to activate (offset 0 dB) or mute
(offset -inf).  Gains are engineered so that, at full load with unit
demands and unit noise:

- an active LPN whose graph neighbors are all muted serves its UE at
  power exactly 1 (its power limit);
- two adjacent active LPNs push each other just above the limit, so
  feasible activation patterns are exactly the independent sets;
- a muted LPN's UE falls back to its macro, which needs power n^2
  (plus a small epsilon-interference term), dwarfing any LPN saving.

Minimizing total power therefore activates a maximum independent set.
:func:`exhaustive_offset_search` checks this by enumerating all 2^n
patterns with the real solver, :func:`mis_bruteforce` provides the
combinatorial oracle, and :func:`verify_bounds` evaluates the analytic
per-cardinality power bounds showing k+1 active LPNs always beat k.

Power units here coincide with capacity in bits (demand 1 bit/s over a
unit resource grid), so solver outputs can be compared directly against
the constructions's closed-form values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .association import OffsetVector
from .coupling import SolverSettings
from .scenario import Cell, CellKind, Scenario, UserEquipment
from .tabu import EvalRecord, Evaluator

__all__ = [
    "Graph", "GadgetInstance", "ExhaustiveResult", "BoundCheck",
    "load_graph", "save_graph", "build_gadget", "mis_bruteforce",
    "exhaustive_offset_search", "verify_bounds", "pattern_power_bounds",
    "active_lpns", "MACRO_LIMIT_SENTINEL", "GADGET_LEVELS",
]

# stands in for the construction's unbounded macro power limit
MACRO_LIMIT_SENTINEL = 1e12

GADGET_LEVELS = (-math.inf, 0.0)


@dataclass(frozen=True)
class Graph:
    """Undirected graph: node count plus normalized edge list."""

    num_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if (u, v) in seen or (v, u) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            if u > v:
                raise ValueError("edges must be stored as (low, high)")
            seen.add((u, v))

    @classmethod
    def from_edges(cls, num_nodes: int, edges) -> "Graph":
        normalized = sorted({(min(u, v), max(u, v)) for u, v in edges})
        return cls(num_nodes, tuple(normalized))

    def neighbor_sets(self) -> list[set[int]]:
        out = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            out[u].add(v)
            out[v].add(u)
        return out

    def is_independent(self, nodes) -> bool:
        nodes = set(nodes)
        return all(not (u in nodes and v in nodes) for u, v in self.edges)


def load_graph(path, num_nodes: int | None = None) -> Graph:
    """Read an edge-list file: one 0-indexed ``u v`` pair per line.

    Blank lines and ``#`` comments are skipped.  The node count defaults
    to max id + 1; pass ``num_nodes`` when trailing nodes are isolated.
    """
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {body!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if num_nodes is None:
        if not edges:
            raise ValueError(
                "cannot infer node count from an empty edge list; "
                "pass num_nodes")
        num_nodes = max(max(u, v) for u, v in edges) + 1
    return Graph.from_edges(num_nodes, edges)


def save_graph(path, graph: Graph) -> None:
    lines = [f"{u} {v}" for u, v in graph.edges]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


@dataclass(frozen=True)
class GadgetInstance:
    """Scenario realizing the reduction for one graph."""

    graph: Graph
    scenario: Scenario
    epsilon: float
    levels: tuple[float, ...] = GADGET_LEVELS

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    def offsets_for(self, active) -> OffsetVector:
        """Offset vector activating exactly the given node set."""
        active = set(active)
        return OffsetVector(
            self.levels,
            tuple(1 if i in active else 0 for i in range(self.num_nodes)))


def build_gadget(graph: Graph, epsilon: float = 1e-4) -> GadgetInstance:
    """Instance with one macro, one LPN and one UE per graph node.

    Gains: macro i reaches only UE i at 1/n^2; LPN i reaches UE i at 1
    and each graph-neighbor UE at ``epsilon``; everything else is 0.
    Demands, noise and the LPN power limit are all 1 on a unit resource
    grid; the macro limit is a large sentinel.  Requires n >= 2 and
    epsilon < 1/n^2 (so an active neighbor LPN can never out-advertise a
    UE's own macro).
    """
    n = graph.num_nodes
    if n < 2:
        raise ValueError("the construction needs at least 2 nodes")
    if not 0.0 < epsilon < 1.0 / n**2:
        raise ValueError(
            f"epsilon must lie in (0, 1/n^2) = (0, {1.0 / n**2}); "
            f"got {epsilon}")

    cells = []
    for i in range(n):
        cells.append(Cell(i, CellKind.MACRO, (float(i), 0.0), 1.0,
                          MACRO_LIMIT_SENTINEL, 1.0))
    for i in range(n):
        cells.append(Cell(n + i, CellKind.LPN, (float(i), 1.0), 1.0,
                          1.0, 1.0))
    ues = [UserEquipment(i, (float(i), 1.0), 1.0) for i in range(n)]

    gain = np.zeros((2 * n, n))
    for i in range(n):
        gain[i, i] = 1.0 / n**2
        gain[n + i, i] = 1.0
    for u, v in graph.edges:
        gain[n + u, v] = epsilon
        gain[n + v, u] = epsilon

    scenario = Scenario(cells, ues, gain, noise_power=1.0,
                        num_resource_units=1, resource_bandwidth=1.0)
    return GadgetInstance(graph, scenario, epsilon)


def mis_bruteforce(graph: Graph) -> tuple[int, frozenset[int]]:
    """Exact maximum independent set by subset enumeration (n <= 20)."""
    n = graph.num_nodes
    if n > 20:
        raise ValueError("brute force is limited to 20 nodes")
    edge_masks = [(1 << u) | (1 << v) for u, v in graph.edges]
    best_size = -1
    best_mask = 0
    for mask in range(1 << n):
        size = mask.bit_count()
        if size <= best_size:
            continue
        if all((mask & em) != em for em in edge_masks):
            best_size = size
            best_mask = mask
    members = frozenset(i for i in range(n) if best_mask >> i & 1)
    return best_size, members


def active_lpns(offsets: OffsetVector) -> frozenset[int]:
    """Positions whose offset level is finite (the LPN participates)."""
    return frozenset(i for i, v in enumerate(offsets.values)
                     if not math.isinf(v))


@dataclass(frozen=True)
class ExhaustiveResult:
    best_offsets: OffsetVector
    best_record: EvalRecord
    num_feasible: int
    num_evaluated: int

    @property
    def active_set(self) -> frozenset[int]:
        return active_lpns(self.best_offsets)


def exhaustive_offset_search(gadget: GadgetInstance,
                             solver: SolverSettings | None = None,
                             evaluator: Evaluator | None = None
                             ) -> ExhaustiveResult:
    """Minimum-energy feasible pattern over all 2^n activations (n <= 16).

    Patterns are scanned in ascending bitmask order and the first strict
    minimum is kept, so ties resolve deterministically.
    """
    n = gadget.num_nodes
    if n > 16:
        raise ValueError("exhaustive search is limited to 16 nodes")
    ev = evaluator if evaluator is not None else Evaluator(
        gadget.scenario, solver)
    best: EvalRecord | None = None
    num_feasible = 0
    for mask in range(1 << n):
        active = [i for i in range(n) if mask >> i & 1]
        record = ev.evaluate(gadget.offsets_for(active))
        if record.feasible:
            num_feasible += 1
            if best is None or record.objective < best.objective:
                best = record
    if best is None:
        raise RuntimeError(
            "no feasible activation pattern; the gadget construction "
            "guarantees at least the all-muted one")
    return ExhaustiveResult(best.offsets, best, num_feasible, 1 << n)


@dataclass(frozen=True)
class BoundCheck:
    """Analytic power bounds comparing k against k+1 active LPNs."""

    num_active: int
    lower_at_k: float
    upper_at_k_plus_1: float

    @property
    def holds(self) -> bool:
        return self.upper_at_k_plus_1 < self.lower_at_k


def pattern_power_bounds(gadget: GadgetInstance,
                         num_active: int) -> tuple[float, float]:
    """[best, worst] total power over independent patterns of given size.

    Each of the k active LPNs costs exactly 1; each of the n-k macros
    costs n^2 scaled by the epsilon interference of at most k active
    neighbors, giving k + (n-k)*n^2 <= total <= k + (n-k)*n^2*(1+eps*k).
    """
    n = gadget.num_nodes
    k = num_active
    if not 0 <= k <= n:
        raise ValueError("num_active out of range")
    lower = k + (n - k) * n**2
    upper = k + (n - k) * n**2 * (1.0 + gadget.epsilon * k)
    return float(lower), float(upper)


def verify_bounds(gadget: GadgetInstance, k: int) -> BoundCheck:
    """Check that k+1 active LPNs always beat k (0 <= k < n).

    Compares the best possible total power with k active LPNs,
    k + (n-k)*n^2, against the worst possible with k+1,
    k + (n-k)*n^2 + [1 - n^2 + eps*(n-k-1)*n^2*(k+1)]; the bracket is
    negative for any sufficiently small eps, which is what makes
    more-activations-always-cheaper (and hence MIS-optimality) go
    through.
    """
    n = gadget.num_nodes
    if not 0 <= k < n:
        raise ValueError("k must satisfy 0 <= k < n")
    eps = gadget.epsilon
    lower = k + (n - k) * n**2
    upper = lower + (1.0 - n**2 + eps * (n - k - 1) * n**2 * (k + 1))
    return BoundCheck(k, float(lower), float(upper))
