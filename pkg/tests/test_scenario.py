import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavrelay.scenario import (
    InfeasibleMission,
    Mission,
    Scenario,
    ScenarioError,
    default_mission,
    generate_scenario,
    place_network,
    t_min,
)

from conftest import make_scenario


def test_t_min_diagonal():
    assert t_min((0, 0, 0.04), (1, 1, 0.04), 18.75) == pytest.approx(1000 * math.sqrt(2) / 18.75)


def test_short_mission_is_infeasible():
    with pytest.raises(InfeasibleMission, match="t_min"):
        default_mission(60.0)


def test_mission_exactly_at_t_min_is_accepted():
    need = t_min((0, 0, 0.04), (1, 0, 0.04), 20.0)
    assert Mission((0, 0, 0.04), (1, 0, 0.04), need, v_max=20.0).t_min == need


@pytest.mark.parametrize(
    "kw",
    [
        dict(h_min=30.0),
        dict(h_min=80.0, h_max=60.0),
        dict(v_max=0.0),
    ],
)
def test_bad_mission_parameters(kw):
    with pytest.raises(ScenarioError):
        Mission((0, 0, 0.08), (1, 1, 0.08), 240.0, **kw)


def test_endpoint_outside_height_band():
    with pytest.raises(ScenarioError, match="height"):
        Mission((0, 0, 0.2), (1, 1, 0.04), 240.0)


def test_counts_follow_density():
    s = make_scenario(lambda_mbs=3, lambda_ue=25)
    assert (s.n_mbs, s.n_ue) == (3, 25)


def test_density_without_any_mbs():
    with pytest.raises(ScenarioError):
        generate_scenario((0, 0, 1, 1), 0.2, 20, default_mission(), 0)


def test_same_seed_same_network():
    assert make_scenario(seed=7) == make_scenario(seed=7)
    assert make_scenario(seed=7) != make_scenario(seed=8)


def test_mbs_drawn_before_ues():
    a = place_network((0, 0, 1, 1), 2, 5, default_mission(), 3)
    b = place_network((0, 0, 1, 1), 2, 9, default_mission(), 3)
    assert a.mbs_list == b.mbs_list
    assert a.ue_list == b.ue_list[:5]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), lm=st.sampled_from([1, 2, 3, 4]), lu=st.integers(1, 40))
def test_round_trip_and_placement(seed, lm, lu):
    s = make_scenario(seed=seed, lambda_mbs=lm, lambda_ue=lu)
    again = Scenario.from_dict(json.loads(s.dumps()))
    assert again == s
    assert again.dumps() == s.dumps()
    for node in s.mbs_list + s.ue_list:
        assert 0.0 <= node.x_km <= 1.0 and 0.0 <= node.y_km <= 1.0


@pytest.mark.parametrize("path", [(), ("mission",), ("mbs_list", 0), ("ue_list", 0), ("mplm_params",)])
def test_unknown_keys_rejected(scenario, path):
    d = json.loads(scenario.dumps())
    target = d
    for p in path:
        target = target[p]
    target["bogus"] = 1
    with pytest.raises((ScenarioError, TypeError)):
        Scenario.from_dict(d)


def test_save_load(tmp_path, scenario):
    p = tmp_path / "s.json"
    scenario.save(p)
    assert Scenario.load(p) == scenario


def test_frequency_outside_hata_range():
    with pytest.raises(ScenarioError):
        make_scenario(carrier_freq=2000.0)


def test_unknown_los_variant():
    with pytest.raises(ScenarioError):
        make_scenario(los_variant="fancy")
