"""Path-loss models for the three link types.

* MBS -> UE: suburban Okumura-Hata (distance in km, frequency in MHz)
* UAV -> UE: LoS/NLoS mixture over a building-grid LoS probability
* MBS -> UAV: 3GPP RMa-AV LoS (distance in m, frequency in GHz)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import (
    LOS_VARIANTS,
    OHPLM_FREQ_MHZ,
    OHPLM_HBS_M,
    OHPLM_HUE_M,
    MplmParams,
)

__all__ = [
    "MplmParams",
    "OhplmConstants",
    "ohplm_constants",
    "pathloss_mbs_ue",
    "los_probability",
    "uav_ue_gain",
    "rx_power_uav_ue",
    "pathloss_mbs_uav",
    "mhz_to_ghz",
]

RMA_AV_HEIGHT_M = (10.0, 300.0)


class ChannelRangeError(ValueError):
    pass


def mhz_to_ghz(f_mhz: float) -> float:
    return f_mhz / 1000.0


@dataclass(frozen=True)
class OhplmConstants:
    A: float
    B: float
    C: float
    a_hue: float


def ohplm_constants(f_c: float, h_bs: float, h_ue: float) -> OhplmConstants:
    """Okumura-Hata suburban constants; ``f_c`` in MHz, heights in meters."""
    for name, val, (lo, hi) in (
        ("f_c", f_c, OHPLM_FREQ_MHZ),
        ("h_bs", h_bs, OHPLM_HBS_M),
        ("h_ue", h_ue, OHPLM_HUE_M),
    ):
        if not lo <= val <= hi:
            raise ChannelRangeError(f"{name}={val} outside Okumura-Hata range [{lo}, {hi}]")
    lf = np.log10(f_c)
    a_hue = (1.1 * lf - 0.7) * h_ue - 1.56 * lf - 0.8
    A = 69.55 + 26.16 * lf - 13.82 * np.log10(h_bs) - a_hue
    B = 44.9 - 6.55 * np.log10(h_bs)
    C = -2.0 * np.log10(f_c / 28.0) ** 2 - 5.4
    return OhplmConstants(float(A), float(B), float(C), float(a_hue))


def pathloss_mbs_ue(constants: OhplmConstants, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ChannelRangeError("distance must be positive")
    out = constants.A + constants.B * np.log10(d) + constants.C
    return out if out.ndim else float(out)


def los_probability(z, h_uav, h_ue, params: MplmParams = MplmParams(), variant: str = "literal"):
    """Building-grid LoS probability at horizontal distance ``z`` (m).

    ``variant="literal"`` uses the unsquared, un-normalized obstruction height
    ``h_uav - (n + 0.5) * (h_uav - h_ue)``; factors that leave [0, 1] are
    clipped so the product stays a probability. ``variant="standard"`` uses
    ``1 - exp(-h_n^2 / 2c^2)`` with ``h_n = h_uav - (n + 0.5)(h_uav - h_ue)/(m + 1)``.
    """
    if variant not in LOS_VARIANTS:
        raise ValueError(f"unknown LoS variant {variant!r}")
    z, h_uav, h_ue = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (z, h_uav, h_ue)))
    if np.any(h_uav <= h_ue):
        raise ChannelRangeError("UAV must be above the UE")
    m = np.floor(z * np.sqrt(params.a_hat * params.b_hat) / 1000.0 - 1.0)
    m_max = int(m.max()) if m.size else -1
    prob = np.ones(z.shape)
    if m_max >= 0:
        n = np.arange(m_max + 1).reshape((-1,) + (1,) * z.ndim)
        dh = h_uav - h_ue
        two_c2 = 2.0 * params.c_hat**2
        if variant == "literal":
            fac = 1.0 - np.exp(-(h_uav - (n + 0.5) * dh) / two_c2)
            fac = np.clip(fac, 0.0, 1.0)
        else:
            h_n = h_uav - (n + 0.5) * dh / np.maximum(m + 1.0, 1.0)
            fac = 1.0 - np.exp(-(h_n**2) / two_c2)
        fac = np.where(n <= m, fac, 1.0)
        prob = np.prod(fac, axis=0)
    return prob if prob.ndim else float(prob)


def uav_ue_gain(d_3d, z, h_uav, h_ue, params: MplmParams = MplmParams(), variant: str = "literal"):
    """Linear channel gain of the UAV->UE mixture model (received / transmitted power)."""
    d = np.asarray(d_3d, dtype=float)
    if np.any(d <= 0):
        raise ChannelRangeError("distance must be positive")
    tau = los_probability(z, h_uav, h_ue, params, variant)
    return d ** (-params.alpha_los) * tau + d ** (-params.alpha_nlos) * (1.0 - tau)


def rx_power_uav_ue(p_uav, d_3d, z, h_uav, h_ue, params: MplmParams = MplmParams(), variant: str = "literal"):
    """Received power (dBm) at a UE from the UAV transmitting ``p_uav`` dBm."""
    g = uav_ue_gain(d_3d, z, h_uav, h_ue, params, variant)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(10.0 ** (np.asarray(p_uav, dtype=float) / 10.0) * g)
    return out if np.ndim(out) else float(out)


def pathloss_mbs_uav(h_uav, d_3d, f_c):
    """RMa-AV LoS path loss in dB; ``d_3d`` in meters, ``f_c`` in GHz."""
    h = np.asarray(h_uav, dtype=float)
    d = np.asarray(d_3d, dtype=float)
    lo, hi = RMA_AV_HEIGHT_M
    if np.any((h < lo) | (h > hi)):
        raise ChannelRangeError(f"UAV height outside RMa-AV range [{lo}, {hi}] m")
    if np.any(d <= 0):
        raise ChannelRangeError("distance must be positive")
    slope = np.maximum(23.9 - 1.8 * np.log10(h), 20.0)
    out = slope * np.log10(d) + 20.0 * np.log10(40.0 * np.pi * f_c / 3.0)
    return out if out.ndim else float(out)
