"""Static figure rendering for run reports.

Figures are rendered straight to PNG files next to the delimited outputs;
there is no interactive display path.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataio import PH_OVERLAY_SCALE, ExperimentTrace
from .simulator import Ensemble


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_trajectory_figure(ens: Ensemble, out_dir, name="trajectories.png"):
    """Mean H, Q (with 5/95 band), C and R over time."""
    s = ens.summary()
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    axes[0, 0].plot(s["t"], s["H_mean"], color="tab:blue")
    axes[0, 0].set_ylabel("pH")
    axes[0, 1].plot(s["t"], s["Q_mean"], color="tab:orange")
    axes[0, 1].fill_between(s["t"], s["Q_q05"], s["Q_q95"],
                            color="tab:orange", alpha=0.25)
    axes[0, 1].set_ylabel("Q")
    axes[1, 0].plot(s["t"], s["C_mean"], color="tab:green")
    axes[1, 0].set_ylabel("C")
    axes[1, 0].set_xlabel("t")
    axes[1, 1].plot(s["t"], s["R_mean"], color="tab:red")
    axes[1, 1].set_ylabel("R")
    axes[1, 1].set_xlabel("t")
    fig.tight_layout()
    return _save(fig, out_dir, name)


def render_overlay_figure(ens: Ensemble, trace: ExperimentTrace | None,
                          out_dir, name="overlay.png"):
    """Simulated Q band with measured Ca channels and scaled pH."""
    s = ens.summary()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(s["t"], s["Q_mean"], color="tab:blue", label="Q (sim)")
    ax.fill_between(s["t"], s["Q_q05"], s["Q_q95"], color="tab:blue", alpha=0.2)
    if trace is not None:
        ax.plot(trace.t, trace.ca_ise, color="tab:orange", label="Ca (ISE)")
        if trace.ca_ic is not None and trace.n_ic_samples:
            mask = np.isfinite(trace.ca_ic)
            ax.plot(trace.t[mask], trace.ca_ic[mask], "o", color="tab:green",
                    label="Ca (IC)")
        ax.plot(trace.t, PH_OVERLAY_SCALE * trace.pH, color="tab:gray",
                label=f"pH x {PH_OVERLAY_SCALE}")
    ax.set_xlabel("t")
    ax.set_ylabel("concentration")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def render_psd_figure(ens: Ensemble, out_dir, name="psd.png"):
    """Size-density snapshots (ensemble mean) at the recorded times."""
    if not ens.psd_snapshots:
        return None
    x = ens.config.grid.x
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for t, f in sorted(ens.psd_snapshots.items()):
        ax.plot(x, f.mean(axis=0), label=f"t = {t:g}")
    ax.set_xlabel("size x")
    ax.set_ylabel("F")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def render_control_figure(t, u_h, u_r, out_dir, name="controls.png"):
    """Input signal and recovered/designed rate modulation."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(t, u_h, color="tab:blue", label="U_H")
    ax.plot(t, u_r, color="tab:orange", label="U_r")
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def render_cost_figure(j_history, out_dir, name="cost.png"):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(np.arange(len(j_history)), j_history, color="tab:blue")
    ax.set_xlabel("iteration")
    ax.set_ylabel("J")
    fig.tight_layout()
    return _save(fig, out_dir, name)
