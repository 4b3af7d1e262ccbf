"""Matplotlib figure rendering for sweep reports (files only, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from banditlab.analysis import AggregateRow, ScalingFit
from banditlab.sim import Trajectory

__all__ = ["save_loglog_figure", "save_curves_figure", "save_single_curve_figure"]


def save_loglog_figure(
    rows: list[AggregateRow], fit: ScalingFit | None, path
) -> Path:
    """Mean final regret vs horizon on log-log axes, with the fitted power law."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4.2))
    T = np.array([r.T for r in rows], dtype=float)
    mean = np.array([r.mean for r in rows])
    err = np.array([r.stderr for r in rows])
    ax.errorbar(T, mean, yerr=err, fmt="o", capsize=3, label="mean final regret")
    if fit is not None:
        grid = np.geomspace(T.min(), T.max(), 64)
        ax.plot(
            grid,
            fit.prefactor * grid**fit.alpha,
            "--",
            label=f"fit: {fit.prefactor:.3g} * T^{fit.alpha:.3f} (R2={fit.r2:.3f})",
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("cumulative pseudo-regret")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": "banditlab"})
    plt.close(fig)
    return path


def save_curves_figure(bands: list[dict], path) -> Path:
    """Mean regret curve per horizon with a pointwise 95% band."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for band in bands:
        ax.plot(band["t"], band["mean"], label=f"T = {band['T']}")
        ax.fill_between(band["t"], band["lo"], band["hi"], alpha=0.2)
    ax.set_xlabel("step t")
    ax.set_ylabel("cumulative pseudo-regret")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": "banditlab"})
    plt.close(fig)
    return path


def save_single_curve_figure(traj: Trajectory, path) -> Path:
    """Regret and realized-regret curves of a single run."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 4.2))
    t = np.arange(1, traj.horizon + 1)
    ax.plot(t, traj.regret_curve, label="pseudo-regret")
    ax.plot(t, traj.realized_curve, alpha=0.6, label="realized regret")
    ax.set_xlabel("step t")
    ax.set_ylabel("cumulative regret")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": "banditlab"})
    plt.close(fig)
    return path
