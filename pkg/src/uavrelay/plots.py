"""Figure rendering for the CLI report paths (PNG/PDF next to the CSV output)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import antenna  # noqa: E402
from .planner import Trajectory  # noqa: E402

STYLE = {
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def pattern_figure(config: antenna.AntennaConfig, path, h_bs: float = 30.0, uav_heights=(40.0, 80.0, 120.0)) -> Path:
    """Vertical/horizontal pattern cuts and array gain toward a UAV on boresight vs 2D distance."""
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
        th = np.linspace(0, 180, 721)
        ph = np.linspace(-180, 180, 721)
        peak = config.g_max + 10 * np.log10(config.n_elements)
        ax1.plot(th, np.maximum(antenna.array_gain(th, 0.0, config) - peak, -60), label="vertical cut")
        ax1.plot(ph + 90, antenna.element_gain(90.0, ph, config) - config.g_max, label="horizontal cut (shifted +90)")
        ax1.set_xlabel("angle (deg)")
        ax1.set_ylabel("normalized gain (dB)")
        ax1.legend()
        dist = np.linspace(1, 1500, 1500)
        for h in uav_heights:
            theta, phi = antenna.local_angles_arrays((0.0, 0.0, h_bs), 0.0, np.stack([dist, 0 * dist, h + 0 * dist], 1))
            ax2.plot(dist, antenna.array_gain(theta, phi, config), label=f"UAV at {h:g} m")
        ax2.set_xlabel("2D distance (m)")
        ax2.set_ylabel("array gain (dBi)")
        ax2.legend()
        return _save(fig, path)


def channel_figure(rows, path) -> Path:
    """``rows`` as produced by :func:`uavrelay.export.channel_rows`."""
    curves: dict[str, list] = {}
    for model, h, d, pl in rows:
        label = model if np.isnan(h) else f"{model} h={h:g} m"
        curves.setdefault(label, []).append((d, pl))
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, pts in curves.items():
            d, pl = np.array(pts).T
            ax.plot(d, pl, label=label)
        ax.set_xscale("log")
        ax.set_xlabel("distance (m)")
        ax.set_ylabel("path loss (dB)")
        ax.legend()
        return _save(fig, path)


def trajectory_figure(traj: Trajectory, path, mbs_xy_km=None, ue_xy_km=None) -> Path:
    p = traj.positions_m
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(9, 4))
        ax = fig.add_subplot(1, 2, 1, projection="3d")
        ax.plot(p[:, 0] / 1000, p[:, 1] / 1000, p[:, 2], marker="o", ms=2)
        ax.set_xlabel("x (km)")
        ax.set_ylabel("y (km)")
        ax.set_zlabel("z (m)")
        ax2 = fig.add_subplot(1, 2, 2)
        ax2.plot(p[:, 0] / 1000, p[:, 1] / 1000, marker="o", ms=2, label="UAV")
        if mbs_xy_km is not None and len(mbs_xy_km):
            m = np.asarray(mbs_xy_km)
            ax2.scatter(m[:, 0], m[:, 1], marker="^", c="k", label="MBS")
        if ue_xy_km is not None and len(ue_xy_km):
            u = np.asarray(ue_xy_km)
            ax2.scatter(u[:, 0], u[:, 1], marker=".", c="tab:red", label="UE")
        ax2.set_xlabel("x (km)")
        ax2.set_ylabel("y (km)")
        ax2.set_aspect("equal")
        ax2.legend(loc="best")
        return _save(fig, path)
