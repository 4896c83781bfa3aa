"""SVG figures for trajectories, PC-plane scatters and evaluation tables."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .control import TrajectoryLog, perceived_normals  # noqa: E402
from .perception import table_columns  # noqa: E402

# fixed metadata keeps the SVG output byte-stable across runs
_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path):
    plt.rcParams["svg.hashsalt"] = "sheartouch"
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_trajectory(log: TrajectoryLog, shape, path: str | Path, normal_every: int = 5) -> None:
    """Boundary, followed path (gid ``trajectory``) and perceived normals."""
    fig, ax = plt.subplots(figsize=(6, 6))
    b = shape.boundary()
    b = np.vstack([b, b[:1]])
    ax.plot(b[:, 0], b[:, 1], color="0.6", lw=1.0, label="boundary")
    pts = log.positions
    if len(pts):
        if log.completed and shape.closed:
            pts = np.vstack([pts, pts[:1]])
        (line,) = ax.plot(pts[:, 0], pts[:, 1], color="C0", lw=1.5, label="trajectory")
        line.set_gid("trajectory")
        n = perceived_normals(log)[::normal_every]
        p = log.positions[::normal_every]
        ax.quiver(p[:, 0], p[:, 1], n[:, 0], n[:, 1], color="C3", width=0.003,
                  angles="xy", scale_units="xy", scale=0.25, label="perceived normal")
        ax.plot(*log.start, "ko", ms=4)
    ax.set_aspect("equal")
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm)")
    ax.set_title(f"{log.shape_kind}: {len(log)} steps, {log.stop_reason}")
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def plot_pc_scatter(points, orientation_deg, path: str | Path, components=(2, 3)) -> None:
    """Scatter of two PC coordinates colored by edge orientation.

    ``points`` holds one column per requested component, in ``components`` order.
    """
    points = np.asarray(points, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 5))
    sc = ax.scatter(points[:, 0], points[:, 1], c=orientation_deg, cmap="twilight", s=8,
                    vmin=-180, vmax=180)
    fig.colorbar(sc, ax=ax, label="orientation (deg)")
    ax.set_xlabel(f"PC{components[0]}")
    ax.set_ylabel(f"PC{components[1]}")
    _save(fig, path)


def plot_eval_table(reports, path: str | Path) -> None:
    """Orientation RMS per sliding direction and On/Off group, one bar series per model."""
    reports = [r for r in reports if r is not None]
    cols = table_columns(reports[0].directions)
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(cols)), 4))
    width = 0.8 / len(reports)
    x = np.arange(len(cols))
    for i, r in enumerate(reports):
        vals = [r.cells[c][1] if c in r.cells else math.nan for c in cols]
        ax.bar(x + i * width, vals, width, label=r.model_name)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels([f"{d:g} {g}" for d, g in cols], rotation=60, fontsize=7)
    ax.set_ylabel("orientation RMS (deg)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
