"""Figure rendering for run reports (file output only, Agg backend).

Figures are derived artifacts for offline inspection; the CSV/JSON outputs
remain the deterministic record.  Every function writes one PNG and returns
its path.
"""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .elastostatics import State


def _crack_overlay(ax, mesh, crack, color="crimson"):
    for comp in crack.components:
        pts = mesh.nodes[list(comp)]
        ax.plot(pts[:, 0], pts[:, 1], color=color, lw=2.2, zorder=5)
    tips = sorted(crack.tips)
    if tips:
        tp = mesh.nodes[tips]
        ax.plot(tp[:, 0], tp[:, 1], "o", color=color, ms=6, zorder=6)


def plot_state(state: State, path: str, title: str = "displacement") -> str:
    """Displacement field with the crack overlaid; per-piece line in 1D."""
    mesh = state.space.mesh
    fig, ax = plt.subplots(figsize=(7.0, 4.2), constrained_layout=True)
    if mesh.dim == 1:
        xs = mesh.nodes[:, 0]
        dof_x = xs[state.space.dof_node]
        order = np.argsort(dof_x, kind="stable")
        for el in range(mesh.n_elements):
            dofs = state.space.dof_table[el]
            seg_x = xs[mesh.elements[el]]
            ax.plot(seg_x, state.u[dofs], "-", color="steelblue", lw=1.6)
        ax.plot(dof_x[order], state.u[order], ".", color="steelblue", ms=4)
        for node in sorted(state.space.crack.nodes):
            ax.axvline(xs[node], color="crimson", ls="--", lw=1.0)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
    else:
        tri_vals = state.u[state.space.dof_table].mean(axis=1)
        coll = ax.tripcolor(mesh.nodes[:, 0], mesh.nodes[:, 1],
                            mesh.elements, facecolors=tri_vals,
                            cmap="RdBu_r", shading="flat")
        fig.colorbar(coll, ax=ax, label="u")
        _crack_overlay(ax, mesh, state.space.crack)
        ax.set_aspect("equal")
    ax.set_title(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_trajectories(trajectories: dict, path: str) -> str:
    """Energy and crack measure against load for one or two evolution modes."""
    fig, (ax_e, ax_l) = plt.subplots(1, 2, figsize=(9.5, 3.8),
                                     constrained_layout=True)
    colors = {"minimal": "steelblue", "equilibrium": "darkorange"}
    for mode, traj in sorted(trajectories.items()):
        ts = [s.t for s in traj.steps]
        ax_e.plot(ts, [s.state.energy.total for s in traj.steps], "o-",
                  color=colors.get(mode, "gray"), label=f"{mode} total")
        ax_e.plot(ts, [s.state.energy.elastic for s in traj.steps], "s--",
                  color=colors.get(mode, "gray"), alpha=0.6,
                  label=f"{mode} elastic")
        ax_l.plot(ts, [s.state.space.crack.length() for s in traj.steps],
                  "o-", color=colors.get(mode, "gray"), label=mode)
    if len(trajectories) == 2:
        tmin = trajectories["minimal"]
        teq = trajectories["equilibrium"]
        for i, (a, b) in enumerate(zip(teq.steps, tmin.steps)):
            if a.state.space.crack.edge_set != b.state.space.crack.edge_set:
                for ax in (ax_e, ax_l):
                    ax.axvline(a.t, color="crimson", ls=":", lw=1.2)
                ax_e.annotate("diverge", (a.t, a.state.energy.total),
                              textcoords="offset points", xytext=(4, 6),
                              color="crimson", fontsize=9)
                break
    ax_e.set_xlabel("t")
    ax_e.set_ylabel("energy")
    ax_e.legend(fontsize=8)
    ax_l.set_xlabel("t")
    ax_l.set_ylabel("crack measure")
    ax_l.legend(fontsize=8)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_measures(results: dict, path: str) -> str:
    """Radius sweeps for the concentration quotients next to the rate values."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2), constrained_layout=True)
    drew = False
    for key, color, marker in (("elastic_concentration", "steelblue", "o"),
                               ("surface_concentration", "darkorange", "s")):
        entry = results.get(key)
        if entry and entry.get("samples"):
            rs = [r for r, _ in entry["samples"]]
            qs = [q for _, q in entry["samples"]]
            ax.plot(rs, qs, marker + "-", color=color, label=key)
            drew = True
    for key, color in (("er_total_variation", "seagreen"),
                       ("j_contour_mean", "purple")):
        entry = results.get(key)
        value = entry.get("value") if isinstance(entry, dict) else entry
        if value is not None:
            ax.axhline(value, color=color, ls="--", lw=1.4, label=key)
            drew = True
    if not drew:
        ax.text(0.5, 0.5, "no tips in the region", ha="center", va="center")
    ax.set_xlabel("radius r")
    ax.set_ylabel("quotient")
    if drew:
        ax.invert_xaxis()
        ax.legend(fontsize=8)
    ax.set_title("concentration sweeps")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_battery(rows: list, path: str) -> str:
    """Margin bars for the inequality battery: positive bars pass."""
    fig, ax = plt.subplots(figsize=(8.5, 4.2), constrained_layout=True)
    if rows:
        labels = [r["state"] for r in rows]
        x = np.arange(len(rows))
        m1 = [r["ce_minus_er"] for r in rows]
        m2 = [r["cf_minus_ce"] for r in rows]
        ax.bar(x - 0.18, m1, width=0.34, color="steelblue",
               label="CE - |ER|")
        ax.bar(x + 0.18, m2, width=0.34, color="darkorange",
               label="CF - CE")
        ax.axhline(0.0, color="black", lw=0.8)
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
        ax.set_yscale("symlog", linthresh=1e-3)
        ax.legend(fontsize=8)
    ax.set_ylabel("margin")
    ax.set_title("concentration inequality margins")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
