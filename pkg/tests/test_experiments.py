import math
import random

import numpy as np
import pytest

from uavrelay.experiments import (
    StudySpec,
    aggregate,
    fifth_percentile_se,
    run_study,
    runtime_scaling,
    trajectory_metrics,
)


def test_fifth_percentile_of_twenty_is_the_worst_ue():
    rng = np.random.default_rng(0)
    se = rng.uniform(0, 2, size=(5, 20))
    np.testing.assert_array_equal(fifth_percentile_se(se), se.min(axis=1))


def test_fifth_percentile_rounds_up():
    se = np.arange(30, dtype=float)[None, :]
    assert fifth_percentile_se(se)[0] == 0.5  # ceil(1.5) = 2 worst UEs


def test_trajectory_metrics_by_hand():
    se = np.array([[0.01, 0.2, 0.3], [0.1, 0.02, 0.3]])
    m = trajectory_metrics(se, 0.05)
    assert m["mean_se"] == pytest.approx((0.51 + 0.42) / 2 / 3)
    # UE0 out 1/2 of the time, UE1 1/2, UE2 never
    assert m["outage"] == pytest.approx((0.5 + 0.5 + 0.0) / 3)
    assert m["p5_se"] == pytest.approx((0.01 + 0.02) / 2)


def test_silent_uav_gives_zero_gain():
    spec = StudySpec(realizations=2, modes=("3d", "no_uav"), p_uav_dbm=float("-inf"))
    res = run_study(spec)
    assert res.row("3d")["se_gain_pct"] == 0.0
    assert res.row("3d")["p5_gain_pct"] == 0.0


def test_paired_modes_share_a_baseline():
    res = run_study(StudySpec(realizations=3, modes=("3d", "2d@80", "no_uav")))
    for rec in res.records:
        base = rec["modes"]["no_uav"]["mean_se"]
        for mode in ("3d", "2d@80"):
            m = rec["modes"][mode]
            assert m["se_gain_pct"] == pytest.approx(100 * (m["mean_se"] - base) / base)
        assert rec["modes"]["3d"]["objective"] >= rec["modes"]["2d@80"]["objective"]


def test_aggregate_ignores_record_order():
    spec = StudySpec(realizations=4, modes=("3d", "2d@120", "no_uav"))
    res = run_study(spec)
    shuffled = list(res.records)
    random.Random(1).shuffle(shuffled)
    assert aggregate(spec, shuffled) == res.rows


def test_worker_count_does_not_matter():
    spec = StudySpec(realizations=3, modes=("3d", "no_uav"), lambda_mbs=(2.0, 3.0))
    assert run_study(spec, jobs=1).rows == run_study(spec, jobs=2).rows


def test_infeasible_realizations_are_counted():
    # 76 s clears the straight-line bound (75.4 s) but only fits 9 lattice moves out of the 10 needed
    spec = StudySpec(realizations=2, T=(76.0,), modes=("3d", "2d@80", "no_uav"))
    res = run_study(spec)
    assert len(res.infeasible) == 4
    assert res.row("3d")["n"] == 0 and res.row("no_uav")["n"] == 2
    assert math.isnan(res.row("3d")["mean_se"])


def test_mission_shorter_than_t_min_is_recorded():
    res = run_study(StudySpec(realizations=1, T=(60.0,), modes=("3d", "no_uav")))
    assert res.infeasible[0]["mode"] == "*"
    assert "t_min" in res.infeasible[0]["reason"]


def test_spec_validation():
    with pytest.raises(ValueError):
        StudySpec(realizations=0)
    with pytest.raises(ValueError):
        StudySpec(kind="nope")
    with pytest.raises(ValueError):
        StudySpec(modes=("2d@x",))
    with pytest.raises(ValueError):
        StudySpec(realizations=2, seeds=(1,))
    with pytest.raises(ValueError):
        StudySpec.from_dict({"realisations": 3})


def test_spec_round_trip_and_hash():
    spec = StudySpec(lambda_mbs=(2.0, 4.0), seeds=(5, 9), realizations=2)
    again = StudySpec.from_dict(spec.to_dict())
    assert again == spec and again.config_hash() == spec.config_hash()
    assert StudySpec(realizations=3).config_hash() != StudySpec(realizations=4).config_hash()
    assert spec.seed_list == (5, 9)


def test_downtilt_sweep_groups():
    spec = StudySpec(kind="downtilt_sweep", realizations=1, downtilts=(-2.0, 10.0), areas_km=(1.0,), modes=("3d", "no_uav"))
    res = run_study(spec)
    assert {r["downtilt"] for r in res.rows} == {-2.0, 10.0}


def test_runtime_scaling_empty_T():
    res = runtime_scaling([100.0], [], [2])
    assert res.runtime == [] and res.fits == []


def test_runtime_scaling_records():
    res = runtime_scaling([100.0], [80.0, 160.0], [2, 3], repeats=1)
    assert len(res.runtime) == 4
    assert {f["vs"] for f in res.fits} == {"N", "states"}
    assert all(r["seconds"] > 0 for r in res.runtime)
