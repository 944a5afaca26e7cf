"""Monte Carlo studies over random networks.

Every realization draws one network from its seed and evaluates all requested
modes on that same network, so gains over the no-UAV baseline are paired.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from . import planner, radio
from .scenario import Mission, ScenarioError, default_flight_area, place_network

STUDY_KINDS = ("se_gain", "outage", "fifth_percentile", "downtilt_sweep", "runtime_scaling")
DEFAULT_MODES = ("3d", "2d@40", "2d@80", "2d@120", "no_uav")
GROUP_KEYS = ("lambda_mbs", "lambda_ue", "T", "downtilt", "area_km")
METRICS = ("mean_se", "se_gain_pct", "outage", "p5_se", "p5_gain_pct", "objective")


@dataclass(frozen=True)
class StudySpec:
    kind: str = "se_gain"
    lambda_mbs: tuple[float, ...] = (2.0,)
    lambda_ue: tuple[float, ...] = (20.0,)
    realizations: int = 100
    T: tuple[float, ...] = (240.0,)
    modes: tuple[str, ...] = DEFAULT_MODES
    seeds: tuple[int, ...] | None = None
    base_seed: int = 0
    downtilts: tuple[float, ...] = (6.0,)
    areas_km: tuple[float, ...] = (1.0,)
    # keep MBS/UE counts at their 1 km^2 values when the area changes
    fixed_counts: bool = False
    xy_step_m: float = 100.0
    z_step_m: float = 10.0
    delta_s: float = 8.0
    qos_threshold: float = 0.05
    p_uav_dbm: float = 30.0
    p_mbs_dbm: float = 46.0
    los_variant: str = "literal"
    # runtime_scaling only
    resolutions_m: tuple[float, ...] = (100.0, 50.0)
    height_counts: tuple[int, ...] = (2,)
    repeats: int = 3

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                object.__setattr__(self, f.name, tuple(v))
        if self.kind not in STUDY_KINDS:
            raise ValueError(f"unknown study kind {self.kind!r}; expected one of {STUDY_KINDS}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        for m in self.modes:
            _parse_mode(m)
        if self.seeds is not None and len(self.seeds) != self.realizations:
            raise ValueError("seeds list length must equal realizations")

    @property
    def seed_list(self) -> tuple[int, ...]:
        if self.seeds is not None:
            return tuple(int(s) for s in self.seeds)
        return tuple(range(self.base_seed, self.base_seed + self.realizations))

    def to_dict(self) -> dict[str, Any]:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StudySpec":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown study keys: {sorted(extra)}")
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_mode(mode: str) -> float | None:
    """``"3d"`` / ``"no_uav"`` -> None, ``"2d@80"`` -> 80.0."""
    if mode in ("3d", "no_uav"):
        return None
    if mode.startswith("2d@"):
        return float(mode[3:])
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class StudyResult:
    spec: StudySpec
    rows: list[dict] = field(default_factory=list)
    records: list[dict] = field(default_factory=list)
    infeasible: list[dict] = field(default_factory=list)
    runtime: list[dict] = field(default_factory=list)
    fits: list[dict] = field(default_factory=list)
    wall_seconds: float = 0.0

    def row(self, mode: str, **group) -> dict:
        for r in self.rows:
            if r["mode"] == mode and all(r[k] == v for k, v in group.items()):
                return r
        raise KeyError((mode, group))


def fifth_percentile_se(se: np.ndarray) -> np.ndarray:
    """Mean SE of the worst ``ceil(0.05 K)`` UEs, per time step. ``se`` is ``(steps, K)``."""
    k = max(1, math.ceil(0.05 * se.shape[1]))
    return np.sort(se, axis=1)[:, :k].mean(axis=1)


def trajectory_metrics(se: np.ndarray, t_c: float) -> dict:
    """Time-averaged per-UE SE, outage probability and 5pSE for per-step SEs ``(steps, K)``."""
    K = se.shape[1]
    return {
        "mean_se": float(se.sum(axis=1).mean() / K),
        "outage": float((se < t_c).mean(axis=0).mean()),
        "p5_se": float(fifth_percentile_se(se).mean()),
    }


@dataclass(frozen=True)
class _Task:
    seed: int
    lambda_mbs: float
    lambda_ue: float
    T: float
    downtilt: float
    area_km: float


def _build_scenario(spec: StudySpec, task: _Task):
    side = task.area_km
    area = (0.0, 0.0, side, side)
    ref = 1.0 if spec.fixed_counts else side * side
    n_mbs = int(round(task.lambda_mbs * ref))
    n_ue = int(round(task.lambda_ue * ref))
    mission = Mission((0.0, 0.0, 0.04), (1.0, 1.0, 0.04), task.T)
    return place_network(
        area,
        n_mbs,
        n_ue,
        mission,
        task.seed,
        flight_area=default_flight_area(area),
        p_mbs=spec.p_mbs_dbm,
        downtilt=task.downtilt,
        uav_tx_power=spec.p_uav_dbm,
        qos_threshold=spec.qos_threshold,
        los_variant=spec.los_variant,
    )


def run_realization(spec: StudySpec, task: _Task) -> dict:
    """Evaluate every mode of ``spec`` on the network drawn for ``task``."""
    out: dict[str, Any] = {**asdict(task), "modes": {}, "infeasible": []}
    try:
        scen = _build_scenario(spec, task)
    except ScenarioError as e:
        out["infeasible"].append({"mode": "*", "reason": str(e)})
        return out
    problem = planner.prepare(scen, spec.xy_step_m, spec.z_step_m, spec.delta_s)
    base = radio.score_no_uav(scen)
    # same (steps, K) shape as a trajectory so a silent UAV reproduces the baseline bit for bit
    base_se = np.broadcast_to(base.se[:1], (problem.n_steps + 1, scen.n_ue))
    base_m = trajectory_metrics(base_se, spec.qos_threshold)
    for mode in spec.modes:
        if mode == "no_uav":
            m = dict(base_m)
            m["objective"] = float(base.sum_rate[0] * (problem.n_steps + 1))
        else:
            h = _parse_mode(mode)
            try:
                if h is None:
                    _, traj = planner.solve_dp(problem)
                else:
                    traj = planner.solve_dp_2d(problem, h)
            except planner.InfeasibleHorizon as e:
                out["infeasible"].append({"mode": mode, "reason": str(e)})
                continue
            se = radio.score_positions(scen, traj.positions_m).se
            m = trajectory_metrics(se, spec.qos_threshold)
            m["objective"] = traj.value
        m["se_gain_pct"] = 100.0 * (m["mean_se"] - base_m["mean_se"]) / base_m["mean_se"]
        m["p5_gain_pct"] = (
            100.0 * (m["p5_se"] - base_m["p5_se"]) / base_m["p5_se"] if base_m["p5_se"] > 0 else float("nan")
        )
        out["modes"][mode] = m
    return out


def _tasks(spec: StudySpec) -> list[_Task]:
    tasks = []
    for area in spec.areas_km:
        for tilt in spec.downtilts:
            for T in spec.T:
                for lm in spec.lambda_mbs:
                    for lu in spec.lambda_ue:
                        for seed in spec.seed_list:
                            tasks.append(_Task(seed, float(lm), float(lu), float(T), float(tilt), float(area)))
    return tasks


def _run_one(args):
    spec, task = args
    return run_realization(spec, task)


def aggregate(spec: StudySpec, records: list[dict]) -> list[dict]:
    """Mean and standard error per (group, mode); order independent of record order."""
    groups: dict[tuple, dict[str, list[dict]]] = {}
    for rec in records:
        key = tuple(rec[k] for k in GROUP_KEYS)
        g = groups.setdefault(key, {})
        for mode, m in rec["modes"].items():
            g.setdefault(mode, []).append((rec["seed"], m))
    rows = []
    for key in sorted(groups):
        for mode in spec.modes:
            items = sorted(groups[key].get(mode, []), key=lambda t: t[0])
            row = dict(zip(GROUP_KEYS, key))
            row["mode"] = mode
            row["n"] = len(items)
            for metric in METRICS:
                vals = np.array([m[metric] for _, m in items], dtype=float)
                vals = vals[np.isfinite(vals)]
                row[metric] = float(vals.mean()) if len(vals) else float("nan")
                row[metric + "_se"] = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rows.append(row)
    return rows


def run_study(spec: StudySpec, jobs: int = 1) -> StudyResult:
    t0 = time.perf_counter()
    if spec.kind == "runtime_scaling":
        res = runtime_scaling(spec.resolutions_m, spec.T, spec.height_counts, repeats=spec.repeats, spec=spec)
        res.wall_seconds = time.perf_counter() - t0
        return res
    tasks = _tasks(spec)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_run_one, [(spec, t) for t in tasks], chunksize=4))
    else:
        records = [run_realization(spec, t) for t in tasks]
    res = StudyResult(spec=spec, records=records)
    for rec in records:
        for bad in rec["infeasible"]:
            res.infeasible.append({**{k: rec[k] for k in ("seed",) + GROUP_KEYS}, **bad})
    res.rows = aggregate(spec, records)
    res.wall_seconds = time.perf_counter() - t0
    return res


def _linear_fit(x, y) -> dict:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan")}
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def runtime_scaling(
    grid_resolutions,
    T_values,
    height_counts,
    repeats: int = 3,
    seed: int = 0,
    spec: StudySpec | None = None,
) -> StudyResult:
    """Time the backward sweep for each (resolution, height count, T).

    The reward field is computed once per lattice and excluded from timing;
    each record keeps the fastest of ``repeats`` solves.
    """
    spec = spec or StudySpec(kind="runtime_scaling", resolutions_m=tuple(grid_resolutions),
                             T=tuple(T_values) or (240.0,), height_counts=tuple(height_counts), repeats=repeats)
    res = StudyResult(spec=spec)
    T_values = list(T_values)
    if not T_values:
        return res
    delta = spec.delta_s
    steps = [planner.horizon_steps(T, delta) for T in T_values]
    cases = []
    for resolution in grid_resolutions:
        for n_h in height_counts:
            heights = 40.0 + 10.0 * np.arange(n_h)
            mission = Mission((0.0, 0.0, 0.04), (1.0, 1.0, 0.04), max(T_values), 18.75, 40.0, float(heights[-1]))
            scen = place_network((0, 0, 1, 1), 2, 20, mission, seed, los_variant=spec.los_variant)
            problem = planner.prepare(scen, resolution, 10.0, delta, heights=heights)
            cases.extend((resolution, n_h, problem, T, n) for T, n in zip(T_values, steps))
    best = [math.inf] * len(cases)
    # round-robin over every case so a slow spell on the host hits all of them alike
    for _ in range(max(1, repeats)):
        for k, (_, _, problem, _, n) in enumerate(cases):
            t0 = time.perf_counter()
            planner.bellman_sweep(problem.rewards, problem.actions, problem.finish, n)
            best[k] = min(best[k], time.perf_counter() - t0)
    for (resolution, n_h, problem, T, n), secs in zip(cases, best):
        res.runtime.append(
            {
                "resolution_m": float(resolution),
                "height_levels": int(n_h),
                "T": float(T),
                "N": n,
                "states": problem.grid.n_states,
                "fan_out": problem.actions.fan_out,
                "seconds": secs,
            }
        )
    for resolution in grid_resolutions:
        for n_h in height_counts:
            recs = [r for r in res.runtime if r["resolution_m"] == resolution and r["height_levels"] == n_h]
            fit = _linear_fit([r["N"] for r in recs], [r["seconds"] for r in recs])
            res.fits.append({"resolution_m": float(resolution), "height_levels": int(n_h), "vs": "N", **fit})
    for T in T_values:
        recs = [r for r in res.runtime if r["T"] == float(T)]
        if len({r["states"] for r in recs}) >= 2:
            fit = _linear_fit([r["states"] for r in recs], [r["seconds"] for r in recs])
            res.fits.append({"T": float(T), "vs": "states", **fit})
    return res
