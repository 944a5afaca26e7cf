"""CSV/JSON writers. Floats are written with 9 significant digits."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import antenna, channel, radio
from .experiments import GROUP_KEYS, METRICS, StudyResult
from .planner import Trajectory
from .scenario import MplmParams, Scenario

TRAJECTORY_COLUMNS = ("step", "t_seconds", "x_km", "y_km", "z_m", "sum_rate", "backhaul_sir_db")
PATTERN_COLUMNS = ("theta_prime", "phi_prime", "element_dB", "af_dB", "total_dBi")
CHANNEL_COLUMNS = ("model", "h_uav_m", "distance_m", "pathloss_db")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def trajectory_csv(traj: Trajectory) -> str:
    p = traj.positions_m
    bh = radio.sir_db(traj.backhaul_sir) if traj.backhaul_sir is not None else np.full(len(p), np.nan)
    rows = (
        (i, t, p[i, 0] / 1000.0, p[i, 1] / 1000.0, p[i, 2], traj.rewards[i], bh[i])
        for i, t in enumerate(traj.times_s)
    )
    return _csv(TRAJECTORY_COLUMNS, rows)


def write_trajectory(traj: Trajectory, prefix, extra: dict | None = None) -> tuple[Path, Path]:
    prefix = Path(prefix)
    csv_path = _write(prefix.with_suffix(".csv"), trajectory_csv(traj))
    meta = {**traj.meta, **(extra or {})}
    meta["waypoints"] = len(traj.states)
    json_path = _write(prefix.with_suffix(".json"), json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return csv_path, json_path


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def snapshot_dict(scenario: Scenario, uav_position_m) -> dict:
    amap, metrics = radio.associate_and_score(scenario, uav_position_m)
    return {
        "uav_position_m": [float(v) for v in np.asarray(uav_position_m, dtype=float)],
        "sum_rate": metrics.sum_rate,
        "backhaul_sir_db": float(radio.sir_db(metrics.backhaul_sir)),
        "ues": [
            {
                "ue": k,
                "server": amap.describe(k),
                "sir_db": float(radio.sir_db(metrics.sir[k])),
                "se": float(metrics.se[k]),
                "outage": bool(metrics.se[k] < scenario.qos_threshold),
            }
            for k in range(scenario.n_ue)
        ],
    }


def pattern_rows(thetas, phis, config: antenna.AntennaConfig):
    T, P = np.meshgrid(np.asarray(thetas, float), np.asarray(phis, float), indexing="ij")
    el = antenna.element_gain(T, P, config)
    af = antenna.array_factor(T, config)
    tot = el + af
    for idx in np.ndindex(T.shape):
        yield T[idx], P[idx], el[idx], af[idx], tot[idx]


def pattern_csv(thetas, phis, config: antenna.AntennaConfig) -> str:
    return _csv(PATTERN_COLUMNS, pattern_rows(thetas, phis, config))


def channel_rows(
    distances_m,
    uav_heights=(40.0, 80.0, 120.0),
    f_mhz: float = 1500.0,
    h_bs: float = 30.0,
    h_ue: float = 2.0,
    params: MplmParams = MplmParams(),
    los_variant: str = "literal",
):
    d = np.asarray(distances_m, dtype=float)
    const = channel.ohplm_constants(f_mhz, h_bs, h_ue)
    for di, pl in zip(d, channel.pathloss_mbs_ue(const, d / 1000.0)):
        yield "ohplm", float("nan"), di, pl
    for h in uav_heights:
        d3 = np.hypot(d, h - h_ue)
        g = channel.uav_ue_gain(d3, d, h, h_ue, params, los_variant)
        for di, gi in zip(d, g):
            yield "mplm", h, di, -10.0 * np.log10(gi)
        d3 = np.hypot(d, h - h_bs)
        for di, pl in zip(d, channel.pathloss_mbs_uav(h, d3, channel.mhz_to_ghz(f_mhz))):
            yield "rma_av", h, di, pl


def channel_csv(distances_m, **kw) -> str:
    return _csv(CHANNEL_COLUMNS, channel_rows(distances_m, **kw))


def study_csv(result: StudyResult) -> str:
    cols = list(GROUP_KEYS) + ["mode", "n"] + [c for m in METRICS for c in (m, m + "_se")]
    return _csv(cols, ([r[c] for c in cols] for r in result.rows))


def runtime_csv(result: StudyResult) -> str:
    cols = ["resolution_m", "height_levels", "T", "N", "states", "fan_out", "seconds"]
    return _csv(cols, ([r[c] for c in cols] for r in result.runtime))


def write_study(result: StudyResult, prefix) -> list[Path]:
    prefix = Path(prefix)
    paths = []
    if result.spec.kind == "runtime_scaling":
        paths.append(_write(prefix.with_suffix(".csv"), runtime_csv(result)))
    else:
        paths.append(_write(prefix.with_suffix(".csv"), study_csv(result)))
    manifest = {
        "kind": result.spec.kind,
        "config_hash": result.spec.config_hash(),
        "spec": result.spec.to_dict(),
        "seeds": list(result.spec.seed_list),
        "realizations_run": len(result.records),
        "infeasible": result.infeasible,
        "fits": result.fits,
        "wall_seconds": result.wall_seconds,
    }
    paths.append(_write(prefix.with_name(prefix.name + "_manifest.json"), json.dumps(manifest, indent=2, default=_jsonable) + "\n"))
    return paths
