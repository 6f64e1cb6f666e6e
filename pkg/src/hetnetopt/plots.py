"""Figure rendering for sweep results.

Two figures mirror the usual way these studies are presented: mean
energy versus demand per policy (log-scale y, series truncated where no
seed is feasible) and a per-cell energy comparison between two policies
at one demand.  Figures are written straight to files; callers on
headless boxes should select a non-interactive backend first (the CLI
does).  pyplot is imported lazily so importing this module does not drag
a backend in.
"""

from __future__ import annotations

from pathlib import Path

__all__ = ["energy_vs_demand_figure", "per_cell_energy_figure",
           "render_sweep_figures"]

_POLICY_STYLE = {
    "OO": {"color": "tab:blue", "marker": "o"},
    "ZO": {"color": "tab:orange", "marker": "s"},
    "MO": {"color": "tab:red", "marker": "^"},
    "NL": {"color": "tab:gray", "marker": "d"},
}


def energy_vs_demand_figure(summary: dict, path) -> Path:
    """Mean energy (feasible seeds only) against demand, one line per policy."""
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for policy in summary["policies"]:
        points = [(e["demand_bps"] / 1e3, e["mean_energy_mw"])
                  for e in summary["per_demand"]
                  if e["policy"] == policy and e["mean_energy_mw"] is not None]
        if not points:
            continue
        xs, ys = zip(*points)
        style = _POLICY_STYLE.get(policy, {})
        ax.plot(xs, ys, label=policy, **style)
    ax.set_xlabel("demand per UE (kbit/s)")
    ax.set_ylabel("sum transmission energy (mW per resource unit)")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def per_cell_energy_figure(rows, demand: float, seed: int, path,
                           policies=("ZO", "OO"),
                           num_macros: int | None = None) -> Path | None:
    """Grouped per-cell energy bars for two policies at one (seed, demand).

    Returns None when either requested row is missing or has no per-cell
    data; a macro/LPN split line is drawn when ``num_macros`` is given.
    """
    import matplotlib.pyplot as plt

    selected = {}
    for r in rows:
        if r.seed == seed and r.demand == demand and r.policy in policies:
            selected[r.policy] = r
    if any(p not in selected or not selected[p].per_cell_energy
           for p in policies):
        return None

    n = len(selected[policies[0]].per_cell_energy)
    xs = range(n)
    width = 0.8 / len(policies)
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    for t, policy in enumerate(policies):
        vals = selected[policy].per_cell_energy
        offs = [x + (t - (len(policies) - 1) / 2) * width for x in xs]
        color = _POLICY_STYLE.get(policy, {}).get("color")
        ax.bar(offs, vals, width=width, label=policy, color=color)
    if num_macros is not None and 0 < num_macros < n:
        ax.axvline(num_macros - 0.5, color="black", lw=0.8, ls="--")
        ax.text(num_macros - 0.5, ax.get_ylim()[1], " macros | LPNs ",
                ha="center", va="top", fontsize=8)
    ax.set_xlabel("cell id")
    ax.set_ylabel("transmission energy (mW per resource unit)")
    ax.set_title(f"seed {seed}, demand {demand / 1e3:g} kbit/s")
    ax.set_xticks(list(xs))
    ax.tick_params(axis="x", labelsize=7)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_sweep_figures(rows, summary: dict, out_dir,
                         num_macros: int | None = None) -> list[Path]:
    """Render the standard report figures next to the delimited output.

    The per-cell figure uses the highest demand at which some seed has
    both ZO and OO feasible (the most interesting operating point); it
    is skipped when no such point exists or OO/ZO were not requested.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [energy_vs_demand_figure(summary,
                                       out_dir / "energy_vs_demand.png")]

    feasible = {}
    for r in rows:
        if r.policy in ("ZO", "OO") and r.feasible and r.per_cell_energy:
            feasible.setdefault((r.seed, r.demand), set()).add(r.policy)
    both = [(demand, seed) for (seed, demand), pols in feasible.items()
            if pols == {"ZO", "OO"}]
    if both:
        demand, seed = max(both, key=lambda t: (t[0], -t[1]))
        fig = per_cell_energy_figure(rows, demand, seed,
                                     out_dir / "per_cell_energy.png",
                                     num_macros=num_macros)
        if fig is not None:
            written.append(fig)
    return written
