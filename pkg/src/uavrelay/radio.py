"""Received powers, association, relay SIR and spectral efficiency.

Transmitters are MBS sectors (index ``j = 3 * mbs + sector``) plus the UAV,
which takes index ``J = 3 * n_mbs`` in server arrays. Powers are linear mW.
The network is interference limited, so no noise term appears anywhere.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import antenna, channel
from .scenario import Scenario

#: Linear SIR reported when a link sees no interference at all.
SIR_CAP = 1e9


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def sir_db(sir):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(sir)


@dataclass(frozen=True)
class SectorTable:
    """Flattened per-sector transmitter data for a scenario."""

    pos_m: np.ndarray  # (J, 3)
    bearing: np.ndarray  # (J,)
    p_mw: np.ndarray  # (J,)
    configs: tuple[antenna.AntennaConfig, ...]  # one per sector

    @property
    def n(self) -> int:
        return len(self.bearing)


def sector_table(scenario: Scenario) -> SectorTable:
    pos, bearing, p, cfgs = [], [], [], []
    for m in scenario.mbs_list:
        cfg = antenna.AntennaConfig.with_downtilt(m.downtilt)
        for b in m.sector_bearings:
            pos.append((m.x_km * 1000.0, m.y_km * 1000.0, m.height_m))
            bearing.append(b)
            p.append(dbm_to_mw(m.tx_power_dbm))
            cfgs.append(cfg)
    return SectorTable(np.array(pos), np.array(bearing), np.array(p, dtype=float), tuple(cfgs))


def ue_positions_m(scenario: Scenario) -> np.ndarray:
    return np.array([(u.x_km * 1000.0, u.y_km * 1000.0, u.height_m) for u in scenario.ue_list]).reshape(-1, 3)


def _sector_gains_db(sectors: SectorTable, rx_m: np.ndarray) -> np.ndarray:
    """Array gain (dBi) of every sector toward every receiver, shape ``(R, J)``."""
    out = np.empty((rx_m.shape[0], sectors.n))
    for j in range(sectors.n):
        theta, phi = antenna.local_angles_arrays(sectors.pos_m[j], sectors.bearing[j], rx_m)
        out[:, j] = antenna.array_gain(theta, phi, sectors.configs[j])
    return out


@lru_cache(maxsize=64)
def direct_powers(scenario: Scenario) -> np.ndarray:
    """MBS-sector -> UE received powers, ``(K, J)`` mW. UAV independent, cached per scenario."""
    sectors = sector_table(scenario)
    ues = ue_positions_m(scenario)
    out = np.empty((len(ues), sectors.n))
    if not len(ues):
        return out
    gains = _sector_gains_db(sectors, ues)
    for k, u in enumerate(scenario.ue_list):
        const = channel.ohplm_constants(scenario.carrier_freq, scenario.h_bs, u.height_m)
        d_km = np.linalg.norm(sectors.pos_m - ues[k], axis=1) / 1000.0
        pl = channel.pathloss_mbs_ue(const, d_km)
        out[k] = sectors.p_mw * 10.0 ** ((gains[k] - pl) / 10.0)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LinkReport:
    """Received powers (mW) for one UAV position."""

    ue_sector: np.ndarray  # (K, J)
    ue_uav: np.ndarray  # (K,)
    uav_sector: np.ndarray  # (J,)


@dataclass(frozen=True)
class LinkField:
    """UAV-dependent received powers for a batch of ``P`` UAV positions."""

    ue_uav: np.ndarray  # (P, K)
    uav_sector: np.ndarray  # (P, J)


def uav_link_powers(scenario: Scenario, positions_m) -> LinkField:
    pos = np.asarray(positions_m, dtype=float).reshape(-1, 3)
    h_uav = pos[:, 2]
    sectors = sector_table(scenario)
    ues = ue_positions_m(scenario)

    # UAV -> UE
    diff = pos[:, None, :] - ues[None, :, :]
    z = np.hypot(diff[..., 0], diff[..., 1])
    d3 = np.sqrt(z**2 + diff[..., 2] ** 2)
    if len(ues):
        g = channel.uav_ue_gain(
            d3, z, h_uav[:, None], ues[None, :, 2], scenario.mplm_params, scenario.los_variant
        )
    else:
        g = np.empty((len(pos), 0))
    ue_uav = dbm_to_mw(scenario.uav_tx_power) * g

    # MBS sectors -> UAV
    gains = _sector_gains_db(sectors, pos)
    d_su = np.linalg.norm(pos[:, None, :] - sectors.pos_m[None, :, :], axis=2)
    pl = channel.pathloss_mbs_uav(h_uav[:, None], d_su, channel.mhz_to_ghz(scenario.carrier_freq))
    uav_sector = sectors.p_mw[None, :] * 10.0 ** ((gains - pl) / 10.0)
    return LinkField(ue_uav=ue_uav, uav_sector=uav_sector)


def compute_link_powers(scenario: Scenario, uav_position_m) -> LinkReport:
    f = uav_link_powers(scenario, uav_position_m)
    return LinkReport(direct_powers(scenario), f.ue_uav[0], f.uav_sector[0])


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), SIR_CAP)
    return np.minimum(r, SIR_CAP)


def backhaul_sir(report) -> float | np.ndarray:
    """SIR of the strongest sector at the UAV against all other sectors.

    Accepts a :class:`LinkReport` or a raw ``(..., J)`` array of powers.
    """
    b = np.asarray(report.uav_sector if isinstance(report, LinkReport) else report, dtype=float)
    best = b.max(axis=-1)
    rest = b.sum(axis=-1) - best
    out = _ratio(best, rest)
    return out if out.ndim else float(out)


def end_to_end_sir(gamma_backhaul, gamma_access):
    """Harmonic-mean (x1) end-to-end SIR of an amplify-and-forward relay."""
    a = np.asarray(gamma_backhaul, dtype=float)
    b = np.asarray(gamma_access, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            np.isinf(a),
            2.0 * b,
            np.where(np.isinf(b), 2.0 * a, 2.0 * a * b / np.where(a + b > 0, a + b, 1.0)),
        )
    out = np.where((a + b) > 0, out, 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AssociationMap:
    server: np.ndarray  # (K,) sector index or uav_index
    n_ue: np.ndarray  # (J + 1,) associated-UE count per transmitter
    uav_index: int

    def describe(self, k: int) -> str:
        s = int(self.server[k])
        if s == self.uav_index:
            return "uav"
        return f"mbs{s // 3}/s{s % 3}"


@dataclass(frozen=True)
class SnapshotMetrics:
    sir: np.ndarray  # (K,) linear
    se: np.ndarray  # (K,) bps/Hz
    sum_rate: float
    backhaul_sir: float

    def outage(self, t_c: float) -> np.ndarray:
        return outage_flags(self, t_c)


@dataclass(frozen=True)
class BatchScores:
    """Per-position association and metrics for ``P`` UAV positions."""

    server: np.ndarray  # (P, K)
    n_ue: np.ndarray  # (P, J + 1)
    sir: np.ndarray  # (P, K)
    se: np.ndarray  # (P, K)
    sum_rate: np.ndarray  # (P,)
    backhaul_sir: np.ndarray  # (P,)


def _associate(direct: np.ndarray, field: LinkField | None, n_pos: int) -> BatchScores:
    K, J = direct.shape
    total = direct.sum(axis=1)
    best_j = np.argmax(direct, axis=1) if J else np.zeros(K, int)
    best = direct[np.arange(K), best_j] if K else np.zeros(0)
    gamma_off = _ratio(best, total - best)

    if field is None:
        server = np.broadcast_to(best_j, (n_pos, K)).copy()
        sir = np.broadcast_to(gamma_off, (n_pos, K)).copy()
        bh = np.full(n_pos, np.nan)
    else:
        bh = backhaul_sir(field.uav_sector)
        gamma_access = _ratio(field.ue_uav, total[None, :])
        gamma_relay = end_to_end_sir(bh[:, None], gamma_access)
        gamma_on = _ratio(best[None, :], (total - best)[None, :] + field.ue_uav)
        relay = gamma_relay > gamma_on
        active = relay.any(axis=1, keepdims=True)
        direct_sir = np.where(active, gamma_on, gamma_off[None, :])
        sir = np.where(relay, gamma_relay, direct_sir)
        server = np.where(relay, J, best_j[None, :])

    offsets = (np.arange(n_pos) * (J + 1))[:, None]
    n_ue = np.bincount((server + offsets).ravel(), minlength=n_pos * (J + 1)).reshape(n_pos, J + 1)
    share = np.take_along_axis(n_ue, server, axis=1)
    se = np.log2(1.0 + sir) / np.maximum(share, 1)
    return BatchScores(server, n_ue, sir, se, se.sum(axis=1), bh)


def score_positions(scenario: Scenario, positions_m, jobs: int = 1, chunk: int = 512) -> BatchScores:
    """Associate UEs and compute metrics for every UAV position in ``positions_m``."""
    pos = np.asarray(positions_m, dtype=float).reshape(-1, 3)
    direct = direct_powers(scenario)
    pieces = [pos[i : i + chunk] for i in range(0, len(pos), chunk)] or [pos]

    def run(p):
        return _associate(direct, uav_link_powers(scenario, p), len(p))

    if jobs > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(run, pieces))
    else:
        parts = [run(p) for p in pieces]
    return BatchScores(*(np.concatenate([getattr(b, f) for b in parts]) for f in BatchScores.__dataclass_fields__))


def score_no_uav(scenario: Scenario) -> BatchScores:
    """Network without the UAV (single row)."""
    return _associate(direct_powers(scenario), None, 1)


def associate_and_score(scenario: Scenario, uav_position_m) -> tuple[AssociationMap, SnapshotMetrics]:
    b = score_positions(scenario, uav_position_m)
    return _unbatch(b, 3 * scenario.n_mbs)


def no_uav_snapshot(scenario: Scenario) -> tuple[AssociationMap, SnapshotMetrics]:
    return _unbatch(score_no_uav(scenario), 3 * scenario.n_mbs)


def _unbatch(b: BatchScores, uav_index: int):
    amap = AssociationMap(b.server[0], b.n_ue[0], uav_index)
    metrics = SnapshotMetrics(b.sir[0], b.se[0], float(b.sum_rate[0]), float(b.backhaul_sir[0]))
    return amap, metrics


def outage_flags(metrics: SnapshotMetrics | np.ndarray, t_c: float) -> np.ndarray:
    se = metrics.se if isinstance(metrics, SnapshotMetrics) else np.asarray(metrics)
    return se < t_c
