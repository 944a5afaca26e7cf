"""World description: network placement, UAV mission and model constants.

Positions of MBSs and UEs are stored as horizontal coordinates in km plus a
height in meters, which is how the propagation models consume them.  Mission
endpoints are km triples (x, y, z).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

Rect = tuple[float, float, float, float]  # (x0, y0, x1, y1) in km
Point3 = tuple[float, float, float]

# Validity floors/ceilings of the propagation models.
OHPLM_FREQ_MHZ = (150.0, 1500.0)
OHPLM_HBS_M = (30.0, 200.0)
OHPLM_HUE_M = (1.0, 10.0)
RMA_AV_MIN_HEIGHT_M = 40.0
LOS_VARIANTS = ("literal", "standard")


class ScenarioError(ValueError):
    """Invalid world description."""


class InfeasibleMission(ScenarioError):
    """Mission duration shorter than the minimum flight time."""


def t_min(start: Sequence[float], finish: Sequence[float], v_max: float) -> float:
    """Minimum flight time in seconds between two km-triples at speed ``v_max`` (m/s)."""
    if v_max <= 0:
        raise ScenarioError(f"v_max must be positive, got {v_max}")
    dist_m = 1000.0 * math.dist(tuple(start), tuple(finish))
    return dist_m / v_max


def _check_rect(rect: Sequence[float], name: str) -> Rect:
    if len(rect) != 4:
        raise ScenarioError(f"{name} must be (x0, y0, x1, y1)")
    x0, y0, x1, y1 = (float(v) for v in rect)
    if not (x1 > x0 and y1 > y0):
        raise ScenarioError(f"{name} is empty: {rect}")
    return (x0, y0, x1, y1)


def _inside(rect: Rect, x: float, y: float, tol: float = 1e-9) -> bool:
    return rect[0] - tol <= x <= rect[2] + tol and rect[1] - tol <= y <= rect[3] + tol


def rect_area(rect: Rect) -> float:
    return (rect[2] - rect[0]) * (rect[3] - rect[1])


@dataclass(frozen=True)
class Mission:
    start: Point3
    finish: Point3
    duration_T: float
    v_max: float = 18.75
    h_min: float = 40.0
    h_max: float = 120.0

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "finish", tuple(float(v) for v in self.finish))
        if len(self.start) != 3 or len(self.finish) != 3:
            raise ScenarioError("mission endpoints must be 3D km triples")
        if self.v_max <= 0:
            raise ScenarioError(f"v_max must be positive, got {self.v_max}")
        if self.h_min < RMA_AV_MIN_HEIGHT_M:
            raise ScenarioError(
                f"h_min={self.h_min} m is below the {RMA_AV_MIN_HEIGHT_M} m floor of the MBS-UAV model"
            )
        if self.h_max < self.h_min:
            raise ScenarioError("h_max must be >= h_min")
        for name, p in (("start", self.start), ("finish", self.finish)):
            h = p[2] * 1000.0
            if not (self.h_min - 1e-9 <= h <= self.h_max + 1e-9):
                raise ScenarioError(f"mission {name} height {h:g} m outside [{self.h_min}, {self.h_max}]")
        need = self.t_min
        if self.duration_T < need - 1e-9:
            raise InfeasibleMission(
                f"duration_T={self.duration_T:g} s is shorter than t_min={need:.4f} s "
                f"(straight-line distance / v_max)"
            )

    @property
    def t_min(self) -> float:
        return t_min(self.start, self.finish, self.v_max)


@dataclass(frozen=True)
class Mbs:
    x_km: float
    y_km: float
    height_m: float = 30.0
    tx_power_dbm: float = 46.0
    sector_bearings: tuple[float, float, float] = (0.0, 120.0, 240.0)
    downtilt: float = 6.0

    def __post_init__(self):
        bearings = tuple(float(b) for b in self.sector_bearings)
        object.__setattr__(self, "sector_bearings", bearings)
        if len(bearings) != 3:
            raise ScenarioError("an MBS has exactly 3 sector bearings")
        for i in range(3):
            for j in range(i + 1, 3):
                sep = abs((bearings[i] - bearings[j] + 180.0) % 360.0 - 180.0)
                if abs(sep - 120.0) > 1e-9:
                    raise ScenarioError(f"sector bearings must be 120 deg apart, got {bearings}")
        lo, hi = OHPLM_HBS_M
        if not lo <= self.height_m <= hi:
            raise ScenarioError(f"MBS height {self.height_m} m outside [{lo}, {hi}]")


@dataclass(frozen=True)
class Ue:
    x_km: float
    y_km: float
    height_m: float = 2.0

    def __post_init__(self):
        lo, hi = OHPLM_HUE_M
        if not lo <= self.height_m <= hi:
            raise ScenarioError(f"UE height {self.height_m} m outside [{lo}, {hi}]")


@dataclass(frozen=True)
class MplmParams:
    """Mixture LoS/NLoS path-loss parameters (suburban defaults)."""

    alpha_los: float = 2.09
    alpha_nlos: float = 3.75
    a_hat: float = 0.1
    b_hat: float = 100.0
    c_hat: float = 10.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ScenarioError(f"MPLM parameter {f.name} must be positive")


@dataclass(frozen=True)
class Scenario:
    area: Rect
    flight_area: Rect
    mbs_list: tuple[Mbs, ...]
    ue_list: tuple[Ue, ...]
    mission: Mission
    uav_tx_power: float = 30.0
    carrier_freq: float = 1500.0
    mplm_params: MplmParams = field(default_factory=MplmParams)
    qos_threshold: float = 0.05
    rng_seed: int = 0
    los_variant: str = "literal"

    def __post_init__(self):
        object.__setattr__(self, "area", _check_rect(self.area, "area"))
        object.__setattr__(self, "flight_area", _check_rect(self.flight_area, "flight_area"))
        object.__setattr__(self, "mbs_list", tuple(self.mbs_list))
        object.__setattr__(self, "ue_list", tuple(self.ue_list))
        if not self.mbs_list:
            raise ScenarioError("the network needs at least one MBS")
        lo, hi = OHPLM_FREQ_MHZ
        if not lo <= self.carrier_freq <= hi:
            raise ScenarioError(f"carrier_freq {self.carrier_freq} MHz outside [{lo}, {hi}]")
        if self.los_variant not in LOS_VARIANTS:
            raise ScenarioError(f"los_variant must be one of {LOS_VARIANTS}")
        for m in self.mbs_list:
            if not _inside(self.area, m.x_km, m.y_km):
                raise ScenarioError(f"MBS at ({m.x_km}, {m.y_km}) outside area")
        for u in self.ue_list:
            if not _inside(self.area, u.x_km, u.y_km):
                raise ScenarioError(f"UE at ({u.x_km}, {u.y_km}) outside area")
        for p in (self.mission.start, self.mission.finish):
            if not _inside(self.flight_area, p[0], p[1]):
                raise ScenarioError(f"mission endpoint {p} outside flight area")

    @property
    def n_mbs(self) -> int:
        return len(self.mbs_list)

    @property
    def n_ue(self) -> int:
        return len(self.ue_list)

    @property
    def h_bs(self) -> float:
        return self.mbs_list[0].height_m

    def with_mission(self, mission: Mission) -> "Scenario":
        return replace(self, mission=mission)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["area"] = list(self.area)
        d["flight_area"] = list(self.flight_area)
        for m in d["mbs_list"]:
            m["sector_bearings"] = list(m["sector_bearings"])
        d["mission"]["start"] = list(self.mission.start)
        d["mission"]["finish"] = list(self.mission.finish)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Scenario":
        d = dict(d)
        _reject_unknown(d, cls, "scenario")
        _reject_unknown(d["mission"], Mission, "mission")
        mission = Mission(**d["mission"])
        mbs = []
        for i, m in enumerate(d["mbs_list"]):
            _reject_unknown(m, Mbs, f"mbs_list[{i}]")
            mbs.append(Mbs(**{**m, "sector_bearings": tuple(m.get("sector_bearings", (0.0, 120.0, 240.0)))}))
        ues = []
        for i, u in enumerate(d["ue_list"]):
            _reject_unknown(u, Ue, f"ue_list[{i}]")
            ues.append(Ue(**u))
        mplm = d.get("mplm_params", {})
        _reject_unknown(mplm, MplmParams, "mplm_params")
        d.update(
            area=tuple(d["area"]),
            flight_area=tuple(d["flight_area"]),
            mbs_list=tuple(mbs),
            ue_list=tuple(ues),
            mission=mission,
            mplm_params=MplmParams(**mplm),
        )
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _reject_unknown(d: dict, cls, where: str) -> None:
    if not isinstance(d, dict):
        raise ScenarioError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise ScenarioError(f"unknown keys in {where}: {sorted(extra)}")


def default_flight_area(area: Rect, margin_km: float = 0.1) -> Rect:
    """Flight area sharing the network area's origin, padded by ``margin_km`` on all sides."""
    x0, y0, x1, y1 = area
    return (x0 - margin_km, y0 - margin_km, x1 + margin_km, y1 + margin_km)


def default_mission(duration_T: float = 240.0, **kw) -> Mission:
    return Mission(start=(0.0, 0.0, 0.04), finish=(1.0, 1.0, 0.04), duration_T=duration_T, **kw)


def place_network(
    area: Rect,
    n_mbs: int,
    n_ue: int,
    mission: Mission,
    seed: int,
    *,
    flight_area: Rect | None = None,
    h_bs: float = 30.0,
    h_ue: float = 2.0,
    p_mbs: float = 46.0,
    downtilt: float = 6.0,
    sector_bearings: tuple[float, float, float] = (0.0, 120.0, 240.0),
    **scenario_kw,
) -> Scenario:
    """Uniform i.i.d. placement of a fixed number of MBSs and UEs."""
    area = _check_rect(area, "area")
    if n_mbs < 1:
        raise ScenarioError("the network needs at least one MBS")
    rng = np.random.default_rng(seed)
    lo = np.array(area[:2])
    hi = np.array(area[2:])
    mbs_xy = rng.uniform(lo, hi, size=(n_mbs, 2))
    ue_xy = rng.uniform(lo, hi, size=(n_ue, 2))
    mbs = tuple(
        Mbs(float(x), float(y), h_bs, p_mbs, sector_bearings, downtilt) for x, y in mbs_xy
    )
    ues = tuple(Ue(float(x), float(y), h_ue) for x, y in ue_xy)
    return Scenario(
        area=area,
        flight_area=flight_area if flight_area is not None else default_flight_area(area),
        mbs_list=mbs,
        ue_list=ues,
        mission=mission,
        rng_seed=seed,
        **scenario_kw,
    )


def generate_scenario(
    area: Rect,
    lambda_mbs: float,
    lambda_ue: float,
    mission: Mission,
    seed: int,
    **kw,
) -> Scenario:
    """Drop ``round(lambda * |area|)`` MBSs and UEs uniformly over ``area``.

    Densities are per km^2. Extra keyword arguments go to :func:`place_network`.
    """
    area = _check_rect(area, "area")
    if lambda_mbs <= 0 or lambda_ue <= 0:
        raise ScenarioError("densities must be positive")
    size = rect_area(area)
    n_mbs = int(round(lambda_mbs * size))
    n_ue = int(round(lambda_ue * size))
    if n_mbs < 1:
        raise ScenarioError(f"lambda_mbs={lambda_mbs} over {size:g} km^2 yields no MBS")
    return place_network(area, n_mbs, n_ue, mission, seed, **kw)
