"""Figures for phase diagrams and method comparisons (Agg backend, PNG)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import Comparison, PhaseDiagram, config_hash, version_string  # noqa: E402

__all__ = ["plot_phase_diagram", "plot_comparison"]

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
}


def _save(fig, path, plan):
    # no timestamps or library versions, so reruns give identical bytes
    meta = {"Software": None, "Description": f"{version_string()} config_sha256={config_hash(plan.to_dict())}"}
    fig.savefig(path, format="png", metadata=meta)
    plt.close(fig)


def _edges(values):
    v = np.asarray(values, dtype=float)
    if v.size == 1:
        return np.array([v[0] - 0.5, v[0] + 0.5])
    mid = 0.5 * (v[1:] + v[:-1])
    return np.concatenate([[2 * v[0] - mid[0]], mid, [2 * v[-1] - mid[-1]]])


def plot_phase_diagram(diagram: PhaseDiagram, path):
    """Empirical rate per cell (black 0, white 1) with the threshold curve in red.

    The first axis runs horizontally, the second vertically.
    """
    plan = diagram.plan
    names = plan.axis_names
    if len(names) != 2:
        raise ValueError("phase diagram plots need exactly two sweep axes")
    x_vals, y_vals = plan.axes[names[0]], plan.axes[names[1]]
    grid = diagram.grid()
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        mesh = ax.pcolormesh(_edges(x_vals), _edges(y_vals), grid.T, cmap="gray", vmin=0.0, vmax=1.0)
        fig.colorbar(mesh, ax=ax, label=plan.metric.replace("_", " "))
        axis = plan.threshold_axis or names[0]
        curve = np.array(diagram.curve, dtype=float).reshape(-1, 2)
        ok = ~np.isnan(curve[:, 1])
        if ok.any():
            other, thr = curve[ok, 0], curve[ok, 1]
            xs, ys = (thr, other) if axis == names[0] else (other, thr)
            ax.plot(xs, ys, color="red", lw=1.5)
        ax.set_xlim(_edges(x_vals)[[0, -1]])
        ax.set_ylim(_edges(y_vals)[[0, -1]])
        ax.set_xlabel(names[0])
        ax.set_ylabel(names[1])
        ax.set_title(plan.name)
        fig.tight_layout()
        _save(fig, path, plan)


def plot_comparison(comp: Comparison, path):
    """Mean metric with one-std error bars per method along the first axis."""
    plan = comp.plan
    name = plan.axis_names[0]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        for m in plan.methods:
            rows = [r for r in comp.rows if r["method"] == m]
            x = np.array([float(np.ravel(r["values"][0])[0]) for r in rows])
            mean = np.array([r["mean"] for r in rows])
            std = np.array([r["std"] for r in rows])
            ax.errorbar(x, mean, yerr=std, marker="o", ms=3, capsize=2, label=m)
        ax.set_xlabel(name)
        ax.set_ylabel(plan.metric.replace("_", " "))
        ax.set_ylim(-0.05, 1.05)
        ax.legend(frameon=False)
        ax.set_title(plan.name)
        fig.tight_layout()
        _save(fig, path, plan)
