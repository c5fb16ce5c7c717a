"""Static SVG trajectory plots: road, obstacles, executed and planned paths."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Circle, Polygon

from .dynamics import SVX, SX, SY
from .world import SimLog

MODE_COLORS = {
    "prior": "tab:blue",
    "max_brake": "tab:red",
    "max_accel": "tab:green",
    "evasive": "tab:orange",
}


def plot_run(log: SimLog, scenario, out_path) -> None:
    """One figure per run: edges, obstacle circles at key times, the executed
    trajectory and the planner mode-mean trajectories at decision steps."""
    fig, ax = plt.subplots(figsize=(12, 3.2))

    for edge in scenario.edges:
        ax.plot(edge.points[:, 0], edge.points[:, 1], color="black", lw=1.2)
    if scenario.barrier is not None:
        ax.add_patch(Polygon(scenario.barrier, closed=True, facecolor="0.75",
                             edgecolor="0.4"))

    # obstacle circles at reveal time, mid-run and end of run
    t_end = float(log.times[-1])
    key_times = sorted({min(e["t"], t_end) for e in log.events
                        if e["type"] == "reveal"} | {t_end, 0.5 * t_end})
    for script in scenario.obstacles:
        for i, t in enumerate(key_times):
            cx, cy = script.position_at(t)
            ax.add_patch(Circle((cx, cy), script.radius, fill=False,
                                edgecolor="crimson",
                                alpha=0.35 + 0.65 * i / max(1, len(key_times) - 1)))

    # planner mean trajectories where more than one mode was active
    shown = set()
    for t, diag in zip(log.plan_times, log.diagnostics):
        if diag.n_modes > 1 and diag.mean_xy and "decision" not in shown:
            for kind, xy in diag.mean_xy.items():
                ax.plot(xy[:, 0], xy[:, 1], "--", lw=1.0,
                        color=MODE_COLORS.get(kind, "gray"),
                        label=f"{kind} mean @ t={t:.2f}s")
            shown.add("decision")
    ax.plot(log.states[:, SX], log.states[:, SY], color="navy", lw=1.8,
            label=f"executed ({log.status})")

    ax.set_xlabel("X [m]")
    ax.set_ylabel("Y [m]")
    ax.set_title(f"{log.scenario_name} — {log.mode_label} — seed {log.seed}")
    ax.legend(loc="upper left", fontsize=7, ncols=2)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)


def plot_speed_profile(log: SimLog, out_path) -> None:
    fig, ax = plt.subplots(figsize=(8, 2.4))
    ax.plot(log.times, log.states[:, SVX], color="navy")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("vx [m/s]")
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
