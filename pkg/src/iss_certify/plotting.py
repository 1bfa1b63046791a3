"""PNG figures for trajectories and suite reports (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .solver import Trajectory, l2_profile  # noqa: E402
from .verify import VerificationReport  # noqa: E402


def plot_trajectory(traj: Trajectory, path, bound=None) -> Path:
    """Space-time heat map of ``traj`` beside its L2 norm history.

    ``bound`` optionally overlays a curve sampled at ``traj.t``.
    """
    path = Path(path)
    t, norms = l2_profile(traj)
    fig, (ax_map, ax_norm) = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    vmax = float(np.max(np.abs(traj.values))) or 1.0
    mesh = ax_map.pcolormesh(traj.x, t, traj.values, shading="auto", cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    fig.colorbar(mesh, ax=ax_map, label=traj.variable_tag)
    ax_map.set_xlabel("x")
    ax_map.set_ylabel("t")
    ax_norm.plot(t, norms, label=f"||{traj.variable_tag}(., t)||")
    if bound is not None:
        ax_norm.plot(t, bound, "--", label="certified bound")
    ax_norm.set_xlabel("t")
    ax_norm.set_ylim(bottom=0.0)
    ax_norm.legend()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_suite(report: VerificationReport, path) -> Path:
    """Worst relative margin per trial and check; points below the dashed line failed."""
    path = Path(path)
    per_check: dict = {}
    for entry in report.details:
        for check in entry["checks"]:
            per_check.setdefault(check["name"], []).append((entry["trial"], check["worst_margin"]))
    fig, ax = plt.subplots(figsize=(7, 4), constrained_layout=True)
    for name, pts in per_check.items():
        trials, margins = np.array(pts).T
        ax.plot(trials, margins, "o", ms=3, label=name)
    ax.axhline(-report.tol_rel, color="k", ls="--", lw=0.8)
    ax.set_xlabel("trial")
    ax.set_ylabel("worst relative margin")
    ax.set_title(f"{report.name}: {'pass' if report.passed else 'FAIL'}")
    if per_check:
        ax.legend()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
