import json

import numpy as np
import pytest

from hullpeel.experiments import (
    alpha_report,
    cross_route_report,
    estimate_alpha,
    exp_boundary_layer,
    exp_layer_counts,
    exp_limit_shape,
    exp_max_depth_scaling,
    shape_grid,
)
from hullpeel.limits import RadialDensity, h_radial

BALL = RadialDensity("uniform_ball")


def _strip_wall(report):
    return [{k: v for k, v in r.items() if k != "wall_ms"} for r in report.records]


def test_depth_scaling_schedule_validation():
    with pytest.raises(ValueError):
        exp_max_depth_scaling([1000], trials=2)
    with pytest.raises(ValueError):
        exp_max_depth_scaling([1000, 500], trials=2)
    with pytest.raises(ValueError):
        exp_max_depth_scaling([100, 200], trials=0)


def test_depth_scaling_report_shape():
    rep = exp_max_depth_scaling([200, 400], trials=3, seed=1)
    assert rep.name == "max_depth_scaling"
    assert len(rep.records) == 6
    assert {r["n"] for r in rep.records} == {200, 400}
    assert all(r["n_points"] == r["n"] for r in rep.records)
    s = rep.summary
    assert s["expected_slope"] == pytest.approx(2 / 3)
    assert len(s["alpha_by_n"]) == 2
    assert s["alpha_largest_n"] > 0
    cfg = rep.config
    assert cfg["seed"] == 1
    assert cfg["rng_algorithm"] == "philox4x32+seedsequence"
    assert cfg["build"].startswith("hullpeel-")
    assert cfg["density"]["kind"] == "uniform_ball"


def test_depth_scaling_replay_determinism():
    a = exp_max_depth_scaling([150, 300], trials=4, seed=9, threads=1)
    b = exp_max_depth_scaling([150, 300], trials=4, seed=9, threads=4)
    assert _strip_wall(a) == _strip_wall(b)
    assert a.summary == b.summary


def test_report_serializations():
    rep = exp_max_depth_scaling([100, 200], trials=2, seed=3)
    payload = json.loads(rep.to_json())
    assert set(payload) == {"name", "config", "records", "summary"}
    csv_text = rep.records_csv()
    lines = csv_text.splitlines()
    assert lines[0].split(",") == list(rep.records[0].keys())
    assert len(lines) == 1 + len(rep.records)
    assert "\r" not in csv_text


def test_shape_grid_covers_the_support():
    queries, hvals = shape_grid(BALL, 0.1)
    assert np.all(np.linalg.norm(queries, axis=1) <= 1.0 + 1e-12)
    assert hvals.max() == pytest.approx(h_radial(0.0, BALL))
    assert hvals.min() >= 0.0


def test_limit_shape_empty_clouds_hit_the_profile_cap():
    rep = exp_limit_shape(BALL, [1e-6], trials=3, alpha=4 / 3, grid=0.25, seed=0)
    cap = rep.summary["alpha_h0"]
    assert all(r["sup_error"] == pytest.approx(cap, rel=1e-12) for r in rep.records)


def test_limit_shape_error_shrinks_with_m():
    rep = exp_limit_shape(BALL, [300, 3000], trials=6, alpha=4 / 3, grid=0.1, seed=4)
    med = rep.summary["median_sup_error"]
    assert len(rep.records) == 12
    assert med[1] < med[0]
    assert rep.summary["monotone_decreasing"] is True


def test_layer_counts_structure():
    rep = exp_layer_counts(BALL, 2000, trials=3, alpha=4 / 3, seed=5)
    assert all(r["count_sum"] == 2000 for r in rep.records)
    s = rep.summary
    assert len(s["curve_t"]) == len(s["curve_empirical"]) == len(s["curve_continuum"])
    assert s["bulk_l1_rel"] >= 0
    assert 0 <= s["window_empirical_share"] <= 1


def test_layer_counts_rejects_table_densities():
    dens = RadialDensity(
        "table", table_r=np.array([0.0, 1.0]), table_f=np.array([1 / np.pi] * 2)
    )
    with pytest.raises(ValueError):
        exp_layer_counts(dens, 100, trials=1, alpha=4 / 3)


def test_boundary_layer_degenerates_gracefully():
    rep = exp_boundary_layer(BALL, 3, trials=2, seed=6)
    assert rep.summary["layer1_mean"] == 3.0
    assert rep.summary["layer2_mean"] == 0.0
    assert rep.summary["boundary_layer_detected"] is False


def test_boundary_layer_record_columns():
    rep = exp_boundary_layer(BALL, 400, trials=2, seed=7, depth=5)
    for rec in rep.records:
        for k in range(1, 6):
            assert f"layer_{k}" in rec
    assert rep.summary["ratio"] > 0


def test_estimate_alpha_validation():
    with pytest.raises(ValueError):
        estimate_alpha("teleport")
    with pytest.raises(ValueError):
        estimate_alpha("maxdepth", n_schedule=[100, 200], trials=1)
    with pytest.raises(ValueError):
        estimate_alpha("profile", trials=1)
    with pytest.raises(ValueError):
        estimate_alpha("cell", trials=1)


def test_alpha_report_cell_route_small_schedule():
    est, rep = alpha_report("cell", r_schedule=[2, 4], trials=6, seed=8)
    assert est.route == "cell"
    assert est.r == 4.0
    assert np.isfinite(est.alpha_hat)
    assert est.stderr >= 0
    assert len(rep.records) == 12
    assert rep.summary["r"] == [2.0, 4.0]


def test_alpha_report_profile_route_small():
    est, rep = alpha_report("profile", m=800.0, trials=3, seed=2, grid=0.1)
    assert est.route == "profile"
    assert 0.5 < est.alpha_hat < 2.5
    assert len(rep.records) == 3


def test_cross_route_report_structure():
    est1 = estimate_alpha("profile", m=600.0, trials=3, seed=1, grid=0.1)
    est2 = estimate_alpha("cell", r_schedule=[2, 4], trials=6, seed=2)
    out = cross_route_report([est1, est2])
    assert len(out["pairs"]) == 1
    pair = out["pairs"][0]
    assert {pair["route_a"], pair["route_b"]} == {"profile", "cell"}
    assert pair["gap"] >= 0
    assert isinstance(pair["consistent"], bool)
    assert {e["route"] for e in out["estimates"]} == {"profile", "cell"}
