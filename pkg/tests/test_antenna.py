import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavrelay.antenna import (
    AntennaConfig,
    array_factor,
    element_gain,
    local_angles,
    local_angles_arrays,
    wrap_phi,
)

angles_theta = st.floats(0.0, 180.0)
angles_phi = st.floats(-180.0, 180.0)


def dirichlet_af_db(theta, n, steer, spacing=0.5):
    """Closed-form uniform-ULA power pattern, normalized to total power 1 per element."""
    x = 2 * math.pi * spacing * (math.cos(math.radians(theta)) - math.cos(math.radians(steer)))
    if abs(math.sin(x / 2)) < 1e-12:
        return 10 * math.log10(n)
    return 10 * math.log10((math.sin(n * x / 2) / math.sin(x / 2)) ** 2 / n)


def test_boresight_element_gain():
    assert element_gain(90.0, 0.0) == 8.0


@pytest.mark.parametrize("theta,phi", [(90.0, 32.5), (90.0, -32.5), (57.5, 0.0), (122.5, 0.0)])
def test_half_power_points(theta, phi):
    assert abs(element_gain(theta, phi) - 5.0) <= 1e-9


def test_backlobe_is_clamped():
    cfg = AntennaConfig()
    assert element_gain(90.0, 180.0) == cfg.g_max - cfg.a_m
    assert element_gain(0.0, 180.0) == cfg.g_max - cfg.a_m


def test_array_factor_peak_at_steering():
    assert abs(array_factor(96.0) - 10 * math.log10(8)) <= 1e-6


def test_single_element_has_flat_array_factor():
    th = np.linspace(0, 180, 181)
    assert np.all(array_factor(th, AntennaConfig(n_elements=1)) == 0.0)


def test_downtilt_moves_the_peak():
    cfg = AntennaConfig.with_downtilt(10.0)
    th = np.linspace(80, 110, 3001)
    assert th[np.argmax(array_factor(th, cfg))] == pytest.approx(100.0, abs=0.01)


@given(theta=angles_theta, n=st.integers(1, 16), tilt=st.floats(-10, 15))
def test_array_factor_matches_closed_form(theta, n, tilt):
    cfg = AntennaConfig.with_downtilt(tilt, n_elements=n)
    got = array_factor(theta, cfg)
    want = dirichlet_af_db(theta, n, 90 + tilt)
    if want < -100:
        assert got < -90
    else:
        assert got == pytest.approx(want, abs=1e-7)


@given(theta=angles_theta, phi=angles_phi)
def test_element_gain_bounds_and_symmetry(theta, phi):
    cfg = AntennaConfig()
    g = element_gain(theta, phi)
    assert cfg.g_max - cfg.a_m <= g <= cfg.g_max
    assert g == element_gain(theta, -phi)
    assert array_factor(theta) <= 10 * math.log10(cfg.n_elements) + 1e-9


@given(phi=st.floats(-1e4, 1e4))
def test_wrap_phi_range(phi):
    w = wrap_phi(phi)
    assert -180.0 < w <= 180.0
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(phi)), abs_tol=1e-9)


def test_local_angles_geometry():
    tx = (0.0, 0.0, 30.0)
    a = local_angles(tx, 0.0, (100.0, 0.0, 30.0))
    assert (a.theta_prime, a.phi_prime) == (90.0, 0.0)
    b = local_angles(tx, 120.0, (-50.0, 50.0 * math.sqrt(3), 30.0))
    assert b.phi_prime == pytest.approx(0.0, abs=1e-9)
    below = local_angles(tx, 0.0, (0.0, 0.0, 2.0))
    assert below.theta_prime == 180.0
    c = local_angles(tx, 240.0, (100.0, 0.0, 30.0))
    assert c.phi_prime == pytest.approx(120.0)


def test_local_angles_coincident():
    with pytest.raises(ValueError):
        local_angles((1.0, 2.0, 3.0), 0.0, (1.0, 2.0, 3.0))


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(0)
    rx = rng.uniform(-500, 500, size=(50, 3))
    th, ph = local_angles_arrays((10.0, -20.0, 30.0), 120.0, rx)
    for i in range(50):
        a = local_angles((10.0, -20.0, 30.0), 120.0, rx[i])
        assert (a.theta_prime, a.phi_prime) == (th[i], ph[i])
