"""Coupled power control at fixed target loads.

Each cell i must carry its served UEs' demands using a fraction nu_i of
its M resource units.  The load induced by transmit power vector p is

    load_i(p) = sum_{j served by i} R_j / ln(1 + SINR_ij),

with R_j the demand in nat/s normalized by M*B and

    SINR_ij = p_i g_ij / (sum_{k != i} p_k g_kj nu_k + sigma^2),

where the interfering powers are scaled by the *target* loads nu_k
(interference is only present on the fraction of resources a neighbor
actually uses).  :func:`solve_power` finds the power vector at which
every serving cell's load equals its target, by Gauss-Seidel sweeps with
a per-cell bisection: load_i is strictly decreasing in p_i, so each
one-dimensional solve is bracketed by doubling and then bisected.

Starting from p = 0 the sweeps increase monotonically toward the least
fixed point when one exists; when the demand is not servable the powers
grow without bound, which is reported as divergence (power ceiling, a
large multiple of the cell's power limit, or the sweep cap).  Minimizing
transmission energy sum(nu_i * p_i) over target loads always lands at
nu = 1 for serving cells, so callers normally solve at full load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "SolveResult", "SolverSettings", "solve_power", "cell_loads", "sinr",
    "energy", "result_energy", "check_feasible", "FEASIBILITY_REL_SLACK",
]

# Relative slack when comparing solved powers against power limits; the
# bisection tolerance would otherwise make exact boundary cases flap.
FEASIBILITY_REL_SLACK = 1e-9


@njit(cache=True)
def _cell_load(x, q, r):
    """Load of one cell at own power x; q = gain/interference per UE."""
    total = 0.0
    for t in range(q.shape[0]):
        z = x * q[t]
        if z <= 0.0:
            return np.inf
        total += r[t] / np.log1p(z)
    return total


@njit(cache=True)
def _solve_kernel(gain, ue_start, ue_idx, g_own, r_csr, noise, target,
                  limits, outer_tol, inner_floor, power_ceiling, max_sweeps,
                  divergence_factor):
    n, num_ues = gain.shape
    p = np.zeros(n)
    # total[j] = sum_k p_k * g_kj * nu_k, kept incrementally
    total = np.zeros(num_ues)
    p1 = np.zeros(n)
    p2 = np.zeros(n)
    sweeps = 0
    status = 0  # 0 running, 1 converged, 2 diverged
    max_rel = 1.0
    while status == 0:
        sweeps += 1
        if sweeps > max_sweeps:
            sweeps -= 1
            status = 2
            break
        if sweeps % 128 == 0:
            # refresh against incremental-update drift
            total[:] = 0.0
            for k in range(n):
                w = p[k] * target[k]
                if w > 0.0:
                    for j in range(num_ues):
                        total[j] += w * gain[k, j]
        inner_rel = min(1e-4, max(inner_floor, 0.01 * max_rel))
        max_rel = 0.0
        for i in range(n):
            a, b = ue_start[i], ue_start[i + 1]
            if a == b:
                continue
            m = b - a
            q = np.empty(m)
            own = p[i] * target[i]
            servable = True
            for t in range(m):
                j = ue_idx[a + t]
                interference = total[j] - own * gain[i, j] + noise
                if g_own[a + t] <= 0.0:
                    servable = False
                    break
                q[t] = g_own[a + t] / interference
            if not servable:
                status = 2
                break
            r = r_csr[a:b]
            tgt = target[i]
            # bracket [lo, hi] with load(lo) >= tgt > load(hi)
            hi = p[i] if p[i] > 0.0 else 1.0
            lo = 0.0
            if _cell_load(hi, q, r) >= tgt:
                while True:
                    lo = hi
                    hi *= 2.0
                    if hi > 2.0 * power_ceiling:
                        break
                    if _cell_load(hi, q, r) < tgt:
                        break
            else:
                while True:
                    cand = hi / 2.0
                    if cand <= 1e-300:
                        break
                    if _cell_load(cand, q, r) >= tgt:
                        lo = cand
                        break
                    hi = cand
            # refine by the Illinois variant of regula falsi: secant steps
            # confined to the bracket, with the stale endpoint's residual
            # halved on repeats so neither side can stall; falls back to
            # midpoint steps if the secant ever degenerates
            if lo <= 0.0:
                lo = 1e-300
            f_lo = _cell_load(lo, q, r) - tgt
            f_hi = _cell_load(hi, q, r) - tgt
            side = 0
            steps = 0
            while hi - lo > inner_rel * hi:
                steps += 1
                denom = f_hi - f_lo
                if denom < 0.0 and f_lo < np.inf and steps <= 60:
                    xm = (lo * f_hi - hi * f_lo) / denom
                    span = hi - lo
                    if xm < lo + 0.01 * span:
                        xm = lo + 0.01 * span
                    elif xm > hi - 0.01 * span:
                        xm = hi - 0.01 * span
                else:
                    xm = 0.5 * (lo + hi)
                fm = _cell_load(xm, q, r) - tgt
                if fm >= 0.0:
                    lo = xm
                    f_lo = fm
                    if side == 1:
                        f_hi *= 0.5
                    side = 1
                else:
                    hi = xm
                    f_hi = fm
                    if side == -1:
                        f_lo *= 0.5
                    side = -1
            x = 0.5 * (lo + hi)
            delta = x - p[i]
            if delta != 0.0:
                w = delta * target[i]
                for j in range(num_ues):
                    total[j] += w * gain[i, j]
                p[i] = x
            rel = abs(delta) / x if x > 0.0 else 0.0
            if rel > max_rel:
                max_rel = rel
            if x > power_ceiling or x > divergence_factor * limits[i]:
                status = 2
                break
        if status == 0 and max_rel <= outer_tol:
            status = 1
        if status == 0 and sweeps % 8 == 0:
            # Aitken extrapolation from three consecutive sweeps: near the
            # feasibility edge plain iteration contracts slowly, and the
            # geometric tail can be summed in one jump.  Componentwise,
            # only on a clean contraction whose steps stand well above the
            # inner-solve noise floor; capped, because a wild jump is worse
            # than a slow one.  The fixed point is unique, so an overshoot
            # just converges back from above.
            jump_rel = 0.0
            for i in range(n):
                d1 = p1[i] - p2[i]
                d2 = p[i] - p1[i]
                if (d1 != 0.0 and d2 != 0.0 and (d1 > 0.0) == (d2 > 0.0)
                        and abs(d2) > 50.0 * inner_rel * p[i]):
                    theta = d2 / d1
                    if 0.0 < theta < 0.95:
                        step = d2 * theta / (1.0 - theta)
                        cap = 50.0 * abs(d2)
                        if step > cap:
                            step = cap
                        elif step < -cap:
                            step = -cap
                        if p[i] + step > 0.0 and step != 0.0:
                            p[i] += step
                            rel = abs(step) / p[i]
                            if rel > jump_rel:
                                jump_rel = rel
            if jump_rel > 0.0:
                total[:] = 0.0
                for k in range(n):
                    w = p[k] * target[k]
                    if w > 0.0:
                        for j in range(num_ues):
                            total[j] += w * gain[k, j]
                if jump_rel > max_rel:
                    max_rel = jump_rel
        p2[:] = p1
        p1[:] = p
    return p, status, sweeps, max_rel


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a coupled power solve.

    ``powers`` are mW per resource unit.  ``loads`` are the achieved
    loads at those powers (equal to the targets up to the solver
    tolerance when converged).  ``diverged`` means the demand was not
    servable: the iteration hit the power ceiling, exceeded a large
    multiple of a power limit while still growing, or ran out of sweeps.
    ``feasible`` additionally requires every power within its cell's
    limit (with a tiny relative slack so exact-boundary instances do not
    flap on the bisection tolerance).  ``residual`` is the largest
    relative power change over the final sweep.
    """

    powers: np.ndarray
    loads: np.ndarray
    target_loads: np.ndarray
    serving: np.ndarray
    converged: bool
    diverged: bool
    feasible: bool
    num_sweeps: int
    residual: float


def _csr(serving: np.ndarray, num_cells: int):
    order = np.argsort(serving, kind="stable")
    counts = np.bincount(serving, minlength=num_cells)
    starts = np.zeros(num_cells + 1, dtype=np.int64)
    np.cumsum(counts, out=starts[1:])
    return starts, order.astype(np.int64)


def _as_targets(target_loads, num_cells: int) -> np.ndarray:
    targets = np.broadcast_to(np.asarray(target_loads, dtype=np.float64),
                              (num_cells,)).copy()
    if np.any(targets <= 0.0) or np.any(targets > 1.0):
        raise ValueError("target loads must lie in (0, 1]")
    return targets


def solve_power(scenario, serving, target_loads=1.0, *,
                outer_tol: float = 1e-9, inner_floor: float = 1e-12,
                max_sweeps: int = 10000, power_ceiling: float = 1e9,
                divergence_factor: float = 1e4) -> SolveResult:
    """Solve for the least power vector meeting the target loads.

    Parameters
    ----------
    serving : per-UE serving cell ids (see :func:`association.associate`).
    target_loads : scalar or per-cell array in (0, 1]; cells serving no
        UE keep power 0 whatever their entry says.
    outer_tol : stop when the largest relative power change over a sweep
        falls below this.
    inner_floor : floor of the per-cell bisection's relative tolerance
        (the bisection runs coarser early on, tied to sweep progress).
    max_sweeps, power_ceiling, divergence_factor : divergence cutoffs;
        exceeding the sweep cap, the absolute ceiling in mW, or
        ``divergence_factor`` times a cell's power limit all classify
        the instance as not servable.
    """
    serving = np.ascontiguousarray(serving, dtype=np.int64)
    n = scenario.num_cells
    if serving.shape != (scenario.num_ues,):
        raise ValueError("serving must have one entry per UE")
    if serving.size and (serving.min() < 0 or serving.max() >= n):
        raise ValueError("serving contains an unknown cell id")
    targets = _as_targets(target_loads, n)
    limits = scenario.power_limits()

    if scenario.num_ues == 0:
        p = np.zeros(n)
        return SolveResult(p, np.zeros(n), targets, serving,
                           True, False, True, 0, 0.0)

    starts, ue_idx = _csr(serving, n)
    gain = np.ascontiguousarray(scenario.gain)
    g_own = gain[serving[ue_idx], ue_idx]
    r_csr = scenario.demand_nats_normalized()[ue_idx]

    p, status, sweeps, residual = _solve_kernel(
        gain, starts, ue_idx, g_own, r_csr, scenario.noise_power, targets,
        limits, outer_tol, inner_floor, power_ceiling, max_sweeps,
        divergence_factor)
    converged = status == 1
    feasible = converged and bool(
        np.all(p <= limits * (1.0 + FEASIBILITY_REL_SLACK)))
    loads = cell_loads(scenario, serving, p, targets)
    return SolveResult(p, loads, targets, serving, converged,
                       not converged, feasible, sweeps, float(residual))


def cell_loads(scenario, serving, powers, coupling_loads) -> np.ndarray:
    """Per-cell load induced by ``powers`` (inf where a demand is unservable)."""
    serving = np.asarray(serving, dtype=np.int64)
    powers = np.asarray(powers, dtype=np.float64)
    coupling = np.broadcast_to(np.asarray(coupling_loads, dtype=np.float64),
                               (scenario.num_cells,))
    s = sinr(scenario, serving, powers, coupling)
    r = scenario.demand_nats_normalized()
    loads = np.zeros(scenario.num_cells)
    with np.errstate(divide="ignore"):
        share = r / np.log1p(s)
    np.add.at(loads, serving, share)
    return loads


def sinr(scenario, serving, powers, coupling_loads) -> np.ndarray:
    """Per-UE SINR at the given powers and coupling loads."""
    serving = np.asarray(serving, dtype=np.int64)
    powers = np.asarray(powers, dtype=np.float64)
    coupling = np.broadcast_to(np.asarray(coupling_loads, dtype=np.float64),
                               (scenario.num_cells,))
    weighted = powers * coupling
    total = weighted @ scenario.gain + scenario.noise_power
    j = np.arange(scenario.num_ues)
    own = powers[serving] * scenario.gain[serving, j]
    interference = total - weighted[serving] * scenario.gain[serving, j]
    return own / interference


def energy(loads, powers) -> float:
    """Transmission energy sum(nu_i * p_i) in mW.

    At full load this is the sum of serving-cell powers; cells at power 0
    contribute nothing regardless of their load entry.
    """
    loads = np.asarray(loads, dtype=np.float64)
    powers = np.asarray(powers, dtype=np.float64)
    active = powers != 0.0
    return float(np.dot(loads[active], powers[active]))


def result_energy(result: SolveResult) -> float:
    """Energy of a solve at its target loads, inf when not converged."""
    if not result.converged:
        return math.inf
    return energy(result.target_loads, result.powers)


def check_feasible(scenario, result: SolveResult,
                   rel_slack: float = FEASIBILITY_REL_SLACK) -> bool:
    """True when the solve converged within the per-cell power limits."""
    if not result.converged:
        return False
    limits = scenario.power_limits()
    return bool(np.all(result.powers <= limits * (1.0 + rel_slack)))


@dataclass(frozen=True)
class SolverSettings:
    """Solver tolerance and divergence knobs, threaded through callers."""

    outer_tol: float = 1e-9
    inner_floor: float = 1e-12
    max_sweeps: int = 10000
    power_ceiling: float = 1e9
    divergence_factor: float = 1e4

    def solve(self, scenario, serving, target_loads=1.0) -> SolveResult:
        return solve_power(
            scenario, serving, target_loads,
            outer_tol=self.outer_tol, inner_floor=self.inner_floor,
            max_sweeps=self.max_sweeps, power_ceiling=self.power_ceiling,
            divergence_factor=self.divergence_factor)
