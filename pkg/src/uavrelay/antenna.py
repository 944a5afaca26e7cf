"""Sectorized 3GPP element pattern and vertical ULA array factor.

Angles are in degrees. ``theta`` is the zenith angle (0 straight up, 90 on the
horizon, 180 straight down); ``phi`` is measured from the sector boresight.
All gain functions broadcast over numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AntennaConfig:
    n_elements: int = 8
    g_max: float = 8.0
    phi_3db: float = 65.0
    theta_3db: float = 65.0
    a_m: float = 30.0
    sla_v: float = 30.0
    element_spacing_v: float = 0.5  # in wavelengths
    steering_theta: float = 96.0
    rho: float = 1.0

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        if self.phi_3db <= 0 or self.theta_3db <= 0:
            raise ValueError("beamwidths must be positive")
        if self.a_m <= 0 or self.sla_v <= 0:
            raise ValueError("a_m and sla_v must be positive")

    @classmethod
    def with_downtilt(cls, downtilt: float, **kw) -> "AntennaConfig":
        return cls(steering_theta=90.0 + downtilt, **kw)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.full(self.n_elements, 1.0 / np.sqrt(self.n_elements))


@dataclass(frozen=True)
class AngleLocal:
    theta_prime: float
    phi_prime: float

    def __post_init__(self):
        if not 0.0 <= self.theta_prime <= 180.0:
            raise ValueError(f"theta_prime {self.theta_prime} outside [0, 180]")
        object.__setattr__(self, "phi_prime", float(wrap_phi(self.phi_prime)))


def wrap_phi(phi):
    """Wrap azimuth to (-180, 180]."""
    w = -((-np.asarray(phi, dtype=float) + 180.0) % 360.0) + 180.0
    return w if np.ndim(w) else float(w)


def element_gain_h(phi_prime, config: AntennaConfig = AntennaConfig()):
    return -np.minimum(12.0 * (np.asarray(phi_prime) / config.phi_3db) ** 2, config.a_m)


def element_gain_v(theta_prime, config: AntennaConfig = AntennaConfig()):
    return -np.minimum(12.0 * ((np.asarray(theta_prime) - 90.0) / config.theta_3db) ** 2, config.sla_v)


def element_gain(theta_prime, phi_prime, config: AntennaConfig = AntennaConfig()):
    """Combined element gain in dBi, bounded to ``[g_max - a_m, g_max]``."""
    attenuation = -(element_gain_h(phi_prime, config) + element_gain_v(theta_prime, config))
    return config.g_max - np.minimum(attenuation, config.a_m)


def array_factor(theta_prime, config: AntennaConfig = AntennaConfig()):
    """Array factor (dB) of an elevation-steered vertical ULA.

    Depends on the zenith angle only. The coherent sum is formed in linear
    power; exact nulls map to ``-inf``.
    """
    theta = np.asarray(theta_prime, dtype=float)
    psi = np.cos(np.radians(theta)) - np.cos(np.radians(config.steering_theta))
    # element-by-element accumulation keeps results independent of batch shape (BLAS is not)
    acc = np.zeros(theta.shape, dtype=complex)
    for p, amp in enumerate(config.amplitudes):
        acc = acc + amp * np.exp(2j * np.pi * config.element_spacing_v * p * psi)
    coherent = np.abs(acc) ** 2
    lin = 1.0 + config.rho * (coherent - 1.0)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.maximum(lin, 0.0))
    return out if out.ndim else float(out)


def array_gain(theta_prime, phi_prime, config: AntennaConfig = AntennaConfig()):
    return element_gain(theta_prime, phi_prime, config) + array_factor(theta_prime, config)


def local_angles_arrays(tx, bearing, rx):
    """Vectorized pattern-frame angles for ``tx -> rx`` rays.

    ``tx``/``rx`` are ``(..., 3)`` arrays in meters; ``bearing`` is the sector
    boresight in degrees, counter-clockwise from +x. Returns ``(theta, phi)``.
    """
    d = np.asarray(rx, dtype=float) - np.asarray(tx, dtype=float)
    horiz = np.hypot(d[..., 0], d[..., 1])
    theta = np.degrees(np.arctan2(horiz, d[..., 2]))
    phi = wrap_phi(np.degrees(np.arctan2(d[..., 1], d[..., 0])) - np.asarray(bearing))
    return theta, phi


def local_angles(tx_position, sector_bearing: float, rx_position) -> AngleLocal:
    if np.allclose(np.asarray(tx_position, float), np.asarray(rx_position, float), atol=0, rtol=0):
        raise ValueError("transmitter and receiver coincide")
    theta, phi = local_angles_arrays(tx_position, sector_bearing, rx_position)
    return AngleLocal(float(theta), float(phi))
