"""Figure rendering for the report path (written next to the CSV outputs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .model import Trajectory


def save_trajectory_plot(traj: Trajectory, path):
    fig, (ax_x, ax_u) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for i in range(traj.states.shape[1]):
        ax_x.plot(traj.times, traj.states[:, i], label=f"x_{i + 1}")
    ax_x.set_ylabel("state")
    ax_x.legend(loc="best", fontsize=8)
    ax_x.grid(alpha=0.3)
    for i in range(traj.controls.shape[1]):
        ax_u.plot(traj.times, traj.controls[:, i], label=f"u_{i + 1}")
    ax_u.set_xlabel("s")
    ax_u.set_ylabel("control")
    ax_u.legend(loc="best", fontsize=8)
    ax_u.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_dual_trace_plot(trace, path):
    iters = [row.iteration for row in trace]
    phis = [row.phi for row in trace]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(iters, phis, "o-", ms=3)
    ax.set_xlabel("iteration")
    ax.set_ylabel("dual objective")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_penalty_plot(weights, values, limit, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(weights, values, "o-", label="penalized value")
    ax.axhline(limit, color="k", ls="--", lw=1, label="constrained value")
    ax.set_xlabel("penalty weight")
    ax.set_ylabel("value")
    ax.legend(loc="best")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
