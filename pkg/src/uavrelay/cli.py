"""Command-line entry point.

Exit codes: 0 ok, 2 configuration error, 3 infeasible mission, 4 oracle disagreement.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import antenna, export, planner
from .experiments import StudySpec, run_study, runtime_scaling
from .scenario import (
    InfeasibleMission,
    Mission,
    Scenario,
    ScenarioError,
    default_flight_area,
    generate_scenario,
)

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_ORACLE = 0, 2, 3, 4
CONFIG_ENV = "UAVRELAY_CONFIG"

DEFAULT_CONFIG: dict = {
    "area_km": [0.0, 0.0, 1.0, 1.0],
    "flight_margin_km": 0.1,
    "lambda_mbs": 2.0,
    "lambda_ue": 20.0,
    "seed": 0,
    "mission": {
        "start": [0.0, 0.0, 0.04],
        "finish": [1.0, 1.0, 0.04],
        "duration_T": 240.0,
        "v_max": 18.75,
        "h_min": 40.0,
        "h_max": 120.0,
    },
    "h_bs_m": 30.0,
    "h_ue_m": 2.0,
    "p_mbs_dbm": 46.0,
    "p_uav_dbm": 30.0,
    "downtilt_deg": 6.0,
    "carrier_mhz": 1500.0,
    "qos_threshold": 0.05,
    "los_variant": "literal",
    "planner": {"xy_step_m": 100.0, "z_step_m": 10.0, "delta_s": 8.0},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, upd: dict, where: str = "") -> dict:
    for k, v in upd.items():
        if k not in base:
            raise ConfigError(f"unknown config key '{where}{k}'")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key '{where}{k}' must be an object")
            _merge(base[k], v, f"{where}{k}.")
        else:
            base[k] = v
    return base


def parse_override(item: str) -> dict:
    if "=" not in item:
        raise ConfigError(f"override '{item}' is not key=value")
    key, raw = item.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    out: dict = {}
    cur = out
    parts = key.strip().split(".")
    for p in parts[:-1]:
        cur = cur.setdefault(p, {})
    cur[parts[-1]] = val
    return out


def read_json(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None


def load_config(path: str | None = None, overrides=()) -> dict:
    """Defaults, then the config file, then ``key=value`` overrides."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        data = read_json(path)
        if not isinstance(data, dict):
            raise ConfigError(f"{path}:1:1: top level must be an object")
        _merge(cfg, data)
    for item in overrides:
        _merge(cfg, parse_override(item))
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def scenario_from_config(cfg: dict) -> Scenario:
    area = tuple(cfg["area_km"])
    return generate_scenario(
        area,
        cfg["lambda_mbs"],
        cfg["lambda_ue"],
        Mission(**cfg["mission"]),
        int(cfg["seed"]),
        flight_area=default_flight_area(area, cfg["flight_margin_km"]),
        h_bs=cfg["h_bs_m"],
        h_ue=cfg["h_ue_m"],
        p_mbs=cfg["p_mbs_dbm"],
        downtilt=cfg["downtilt_deg"],
        uav_tx_power=cfg["p_uav_dbm"],
        carrier_freq=cfg["carrier_mhz"],
        qos_threshold=cfg["qos_threshold"],
        los_variant=cfg["los_variant"],
    )


def _scenario(args, cfg) -> Scenario:
    if getattr(args, "scenario", None):
        try:
            return Scenario.from_dict(read_json(args.scenario))
        except (KeyError, TypeError) as e:
            raise ConfigError(f"{args.scenario}: malformed scenario ({e})") from None
    return scenario_from_config(cfg)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _cfg(args) -> dict:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides)


def cmd_gen(args) -> int:
    cfg = _cfg(args)
    scen = scenario_from_config(cfg)
    text = scen.dumps()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_snapshot(args) -> int:
    cfg = _cfg(args)
    scen = _scenario(args, cfg)
    x, y, z = _floats(args.uav)
    snap = export.snapshot_dict(scen, (x * 1000.0, y * 1000.0, z))
    snap["config_hash"] = config_hash(cfg)
    text = json.dumps(snap, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _solve(args, fixed_height: float | None) -> int:
    cfg = _cfg(args)
    scen = _scenario(args, cfg)
    pc = cfg["planner"]
    problem = planner.prepare(scen, pc["xy_step_m"], pc["z_step_m"], pc["delta_s"], jobs=args.jobs)
    try:
        if fixed_height is None:
            _, traj = planner.solve_dp(problem)
        else:
            traj = planner.solve_dp_2d(problem, fixed_height)
    except planner.InfeasibleHorizon as e:
        m = scen.mission
        print(
            f"infeasible mission: {e}; N={problem.n_steps} steps of {pc['delta_s']:g} s, "
            f"t_min={m.t_min:.2f} s for the straight line at v_max={m.v_max:g} m/s",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    extra = {"config_hash": config_hash(cfg), "field_seconds": problem.field_seconds, "rng_seed": scen.rng_seed}
    csv_path, json_path = export.write_trajectory(traj, args.output, extra)
    print(f"wrote {csv_path} and {json_path}: {len(traj.states)} waypoints, value {traj.value:.6g}")
    if args.plot:
        from . import plots

        plots.trajectory_figure(
            traj,
            args.plot,
            [(m.x_km, m.y_km) for m in scen.mbs_list],
            [(u.x_km, u.y_km) for u in scen.ue_list],
        )
    return EXIT_OK


def cmd_solve(args) -> int:
    return _solve(args, None)


def cmd_solve2d(args) -> int:
    return _solve(args, args.height)


def cmd_oracle(args) -> int:
    try:
        shape = tuple(int(v) for v in args.grid.lower().split("x"))
        assert len(shape) == 3
    except (ValueError, AssertionError):
        raise ConfigError(f"--grid must look like 3x3x2, got {args.grid!r}") from None
    seeds = range(args.base_seed, args.base_seed + args.seeds)
    outcomes = planner.run_oracle(seeds, shape, n_steps=args.steps)
    ok = sum(o.agree for o in outcomes)
    for o in outcomes:
        if not o.agree:
            print(f"seed {o.seed}: {o.detail} (dp={o.dp_value}, es={o.es_value})", file=sys.stderr)
    print(f"{ok}/{len(outcomes)} agree")
    return EXIT_OK if ok == len(outcomes) else EXIT_ORACLE


def cmd_pattern(args) -> int:
    cfg = antenna.AntennaConfig.with_downtilt(args.downtilt, n_elements=args.elements)
    thetas = np.arange(0.0, 180.0 + 1e-9, args.theta_step)
    phis = np.arange(-180.0, 180.0 + 1e-9, args.phi_step)
    text = export.pattern_csv(thetas, phis, cfg)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.plot:
        from . import plots

        plots.pattern_figure(cfg, args.plot)
    return EXIT_OK


def cmd_channel(args) -> int:
    cfg = _cfg(args)
    d = np.geomspace(args.min_m, args.max_m, args.points)
    kw = dict(
        uav_heights=_floats(args.heights),
        f_mhz=cfg["carrier_mhz"],
        h_bs=cfg["h_bs_m"],
        h_ue=cfg["h_ue_m"],
        los_variant=cfg["los_variant"],
    )
    text = export.channel_csv(d, **kw)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.plot:
        from . import plots

        plots.channel_figure(export.channel_rows(d, **kw), args.plot)
    return EXIT_OK


def cmd_study(args) -> int:
    data = read_json(args.spec)
    for item in args.set or []:
        data.update(parse_override(item))
    try:
        spec = StudySpec.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{args.spec}: {e}") from None
    result = run_study(spec, jobs=args.jobs)
    paths = export.write_study(result, args.output)
    print("wrote " + ", ".join(str(p) for p in paths))
    if result.infeasible:
        print(f"{len(result.infeasible)} infeasible (realization, mode) pairs excluded", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = StudySpec(
        kind="runtime_scaling",
        resolutions_m=tuple(_floats(args.resolutions)),
        T=tuple(_floats(args.T)),
        height_counts=tuple(int(v) for v in _floats(args.heights)),
        repeats=args.repeats,
    )
    result = runtime_scaling(spec.resolutions_m, spec.T, spec.height_counts, repeats=spec.repeats, spec=spec)
    paths = export.write_study(result, args.output)
    for f in result.fits:
        if f["vs"] == "N":
            label = f"resolution {f['resolution_m']:g} m, {f['height_levels']} heights, vs N"
        else:
            label = f"T {f['T']:g} s, vs states"
        print(f"{label}: slope {f['slope']:.3g}, R^2 {f['r2']:.3f}")
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavrelay", description="UAV relay trajectory planning over a cellular network.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        sp.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key (dotted)")
        sp.add_argument("--seed", type=int)
        if scenario:
            sp.add_argument("--scenario", help="scenario JSON written by 'gen'")

    sp = sub.add_parser("gen", help="generate a random scenario")
    common(sp, scenario=False)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("snapshot", help="evaluate the network for one UAV position")
    common(sp)
    sp.add_argument("--uav", required=True, help="x_km,y_km,z_m")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_snapshot)

    for name, func in (("solve", cmd_solve), ("solve2d", cmd_solve2d)):
        sp = sub.add_parser(name, help="3D trajectory" if name == "solve" else "fixed-height trajectory")
        common(sp)
        if name == "solve2d":
            sp.add_argument("--height", type=float, required=True)
        sp.add_argument("-o", "--output", required=True, help="output prefix (.csv and .json are written)")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--plot", help="also render the trajectory figure to this path")
        sp.set_defaults(func=func)

    sp = sub.add_parser("oracle", help="compare DP with exhaustive search on tiny instances")
    sp.add_argument("--seeds", type=int, default=100)
    sp.add_argument("--base-seed", type=int, default=0)
    sp.add_argument("--grid", default="3x3x2")
    sp.add_argument("--steps", type=int, default=None, help="fixed horizon (default: random 1..5)")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("pattern", help="dump the MBS antenna pattern")
    sp.add_argument("--downtilt", type=float, default=6.0)
    sp.add_argument("--elements", type=int, default=8)
    sp.add_argument("--theta-step", type=float, default=1.0)
    sp.add_argument("--phi-step", type=float, default=5.0)
    sp.add_argument("-o", "--output")
    sp.add_argument("--plot")
    sp.set_defaults(func=cmd_pattern)

    sp = sub.add_parser("channel", help="dump path loss vs distance for each link model")
    common(sp, scenario=False)
    sp.add_argument("--min-m", type=float, default=10.0)
    sp.add_argument("--max-m", type=float, default=2000.0)
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--heights", default="40,80,120")
    sp.add_argument("-o", "--output")
    sp.add_argument("--plot")
    sp.set_defaults(func=cmd_channel)

    sp = sub.add_parser("study", help="run a Monte Carlo study from a JSON spec")
    sp.add_argument("spec")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.add_argument("-o", "--output", required=True, help="output prefix")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_study)

    sp = sub.add_parser("bench", help="time the DP sweep")
    sp.add_argument("--resolutions", default="100,50")
    sp.add_argument("--T", default="80,160,240,320")
    sp.add_argument("--heights", default="2")
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleMission as e:
        print(f"infeasible mission: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except BrokenPipeError:
        return EXIT_OK
    except (ConfigError, ScenarioError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
