import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavrelay.channel import (
    ChannelRangeError,
    los_probability,
    ohplm_constants,
    pathloss_mbs_uav,
    pathloss_mbs_ue,
    rx_power_uav_ue,
    uav_ue_gain,
)
from uavrelay.scenario import MplmParams

# recorded after evaluating the closed forms by hand with the math module
GOLDEN_OHPLM = dict(a_hue=-0.1673015942043634, A=132.39003319087524, B=35.224855781586214, C=-11.378420211783379)
GOLDEN_RMA_AV = 99.0124734139913


def hata_by_hand(f, hb, hm):
    lf = math.log10(f)
    a = (1.1 * lf - 0.7) * hm - (1.56 * lf + 0.8)
    return dict(
        a_hue=a,
        A=69.55 + 26.16 * lf - 13.82 * math.log10(hb) - a,
        B=44.9 - 6.55 * math.log10(hb),
        C=-2 * math.log10(f / 28) ** 2 - 5.4,
    )


def test_ohplm_constants_golden():
    c = ohplm_constants(1500.0, 30.0, 2.0)
    hand = hata_by_hand(1500.0, 30.0, 2.0)
    for k, v in GOLDEN_OHPLM.items():
        assert abs(getattr(c, k) - v) <= 1e-9
        assert abs(hand[k] - v) <= 1e-9


def test_ohplm_at_one_km():
    c = ohplm_constants(1500.0, 30.0, 2.0)
    assert pathloss_mbs_ue(c, 1.0) == pytest.approx(c.A + c.C, abs=1e-12)
    assert pathloss_mbs_ue(c, 10.0) - pathloss_mbs_ue(c, 1.0) == pytest.approx(c.B)


@pytest.mark.parametrize("args", [(100.0, 30.0, 2.0), (1500.0, 20.0, 2.0), (1500.0, 30.0, 12.0)])
def test_ohplm_range(args):
    with pytest.raises(ChannelRangeError):
        ohplm_constants(*args)


@given(d1=st.floats(0.01, 20), d2=st.floats(0.01, 20))
def test_ohplm_monotone(d1, d2):
    c = ohplm_constants(1500.0, 30.0, 2.0)
    if d1 < d2:
        assert pathloss_mbs_ue(c, d1) <= pathloss_mbs_ue(c, d2)


def test_rma_av_golden():
    hand = max(23.9 - 1.8 * math.log10(40.0), 20.0) * math.log10(1000.0) + 20 * math.log10(40 * math.pi * 1.5 / 3)
    assert abs(pathloss_mbs_uav(40.0, 1000.0, 1.5) - GOLDEN_RMA_AV) <= 1e-9
    assert abs(hand - GOLDEN_RMA_AV) <= 1e-9


def test_rma_av_slope_floor():
    # above ~10^(3.9/1.8) m the slope saturates at 20
    assert pathloss_mbs_uav(300.0, 100.0, 1.5) - pathloss_mbs_uav(300.0, 10.0, 1.5) == pytest.approx(20.0)


def test_rma_av_range():
    with pytest.raises(ChannelRangeError):
        pathloss_mbs_uav(5.0, 100.0, 1.5)
    with pytest.raises(ChannelRangeError):
        pathloss_mbs_uav(40.0, 0.0, 1.5)


@pytest.mark.parametrize("variant", ["literal", "standard"])
def test_los_at_zero_distance(variant):
    assert los_probability(0.0, 80.0, 2.0, variant=variant) == 1.0


def test_los_empty_product_below_first_building():
    p = MplmParams()
    z_first = 1000.0 / math.sqrt(p.a_hat * p.b_hat)
    for variant in ("literal", "standard"):
        assert los_probability(np.nextafter(z_first, 0), 40.0, 2.0, variant=variant) == 1.0
        assert los_probability(z_first * 1.01, 40.0, 2.0, variant=variant) < 1.0


def test_los_standard_by_hand():
    p = MplmParams()
    z, h, hu = 700.0, 60.0, 2.0
    m = math.floor(z * math.sqrt(p.a_hat * p.b_hat) / 1000 - 1)
    want = 1.0
    for n in range(m + 1):
        hn = h - (n + 0.5) * (h - hu) / (m + 1)
        want *= 1 - math.exp(-(hn**2) / (2 * p.c_hat**2))
    assert los_probability(z, h, hu, p, "standard") == pytest.approx(want, rel=1e-12)


def test_los_literal_by_hand():
    p = MplmParams()
    z, h, hu = 700.0, 60.0, 2.0
    m = math.floor(z * math.sqrt(p.a_hat * p.b_hat) / 1000 - 1)
    want = 1.0
    for n in range(m + 1):
        want *= min(max(1 - math.exp(-(h - (n + 0.5) * (h - hu)) / (2 * p.c_hat**2)), 0.0), 1.0)
    assert los_probability(z, h, hu, p, "literal") == want


@given(z=st.floats(0, 3000), h=st.floats(40, 120), variant=st.sampled_from(["literal", "standard"]))
def test_los_is_probability(z, h, variant):
    assert 0.0 <= los_probability(z, h, 2.0, variant=variant) <= 1.0


@given(z1=st.floats(0, 3000), z2=st.floats(0, 3000), h=st.floats(40, 120))
def test_literal_los_nonincreasing(z1, z2, h):
    lo, hi = sorted((z1, z2))
    assert los_probability(hi, h, 2.0) <= los_probability(lo, h, 2.0)


def test_los_requires_uav_above_ue():
    with pytest.raises(ChannelRangeError):
        los_probability(10.0, 2.0, 2.0)


def test_mixture_gain_between_pure_laws():
    p = MplmParams()
    d, z = 300.0, 290.0
    g = uav_ue_gain(d, z, 80.0, 2.0, p)
    assert d ** -p.alpha_nlos <= g <= d ** -p.alpha_los
    assert rx_power_uav_ue(30.0, d, z, 80.0, 2.0, p) == pytest.approx(30.0 + 10 * math.log10(g))
