"""Figures written next to the CLI's CSV output (Agg backend, PNG files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .so3 import log_so3  # noqa: E402

_STYLE = {
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.fontsize": 8,
    "legend.frameon": False,
}

_XYZ = ("x", "y", "z")


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_trajectory(traj, path):
    """Position, attitudes, wing angles and conservation diagnostics over time."""
    t = traj.t
    att = np.array([log_so3(R) for R in traj.R_BI])
    wl = np.array([log_so3(R) for R in traj.R_WLB])
    wr = np.array([log_so3(R) for R in traj.R_WRB])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
        for i, c in enumerate(_XYZ):
            ax[0, 0].plot(t, traj.r_I[:, i], label=c)
            ax[0, 1].plot(t, np.degrees(att[:, i]), label=c)
            ax[1, 0].plot(t, np.degrees(wl[:, i]), color=f"C{i}", label=f"left {c}")
            ax[1, 0].plot(t, np.degrees(wr[:, i]), color=f"C{i}", ls="--", label=f"right {c}")
        ax[0, 0].set_ylabel("torso position (m)")
        ax[0, 1].set_ylabel("torso axis-angle (deg)")
        ax[1, 0].set_ylabel("wing axis-angle (deg)")
        for a in (ax[0, 0], ax[0, 1], ax[1, 0]):
            a.legend(ncol=2)

        d = ax[1, 1]
        for series, label in ((traj.energy, "E"), (traj.pi_z, "pi_z")):
            ref = max(abs(series[0]), 1e-300)
            d.semilogy(t, np.abs(series - series[0]) / ref + 1e-18, label=f"|{label} - {label}(0)| rel.")
        d.semilogy(t, traj.gamma_err + 1e-18, label="|Gamma - R_BI^T e_z|")
        d.set_ylabel("drift")
        d.legend()
        for a in ax[1]:
            a.set_xlabel("t (s)")
        return _save(fig, path)


def plot_oracle_errors(comparison, path, tolerance=None):
    """Worst relative error per state block against time."""
    blocks = {
        "r_I": slice(0, 3),
        "R_BI": slice(3, 12),
        "R_WLB": slice(12, 21),
        "R_WRB": slice(21, 30),
        "velocities": slice(30, 42),
    }
    rel = comparison.rel_series
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for name, sl in blocks.items():
            ax.semilogy(comparison.t, rel[:, sl].max(axis=1) + 1e-18, label=name)
        if tolerance is not None:
            ax.axhline(tolerance, color="k", lw=0.8, ls=":", label="tolerance")
        ax.set_xlabel("t (s)")
        ax.set_ylabel("relative error vs oracle")
        ax.legend(ncol=2)
        return _save(fig, path)
