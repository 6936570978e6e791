from fractions import Fraction

import numpy as np
import pytest

from hullpeel.checks import (
    SUITES,
    dyadic_cloud,
    dyadic_halfplane_cloud,
    parabola_cloud,
    run_verify,
)
from hullpeel.sampling import trial_rng


def test_dyadic_cloud_exactness():
    rng = trial_rng(3, 0)
    pts = dyadic_cloud(rng, 200)
    scaled = pts * 1024
    assert np.array_equal(scaled, np.round(scaled))
    assert np.abs(pts).max() <= 8.0


def test_halfplane_cloud_stays_above_the_axis():
    rng = trial_rng(3, 1)
    pts = dyadic_halfplane_cloud(rng, 200)
    assert pts[:, 1].min() > 0


def test_parabola_cloud_contract():
    rng = trial_rng(3, 2)
    cloud = parabola_cloud(rng, 40)
    xs = [p[0] for p in cloud]
    assert len(set(xs)) == len(xs)
    for x, y in cloud:
        assert isinstance(x, Fraction) and isinstance(y, Fraction)
        assert y > x * x / 2
        assert y < 8


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suite_passes_at_reduced_size(name):
    res = run_verify([name], cases=5, n=16)[0]
    assert res.name == name
    assert res.ok, res.counterexample
    assert res.counterexample is None


def test_run_verify_all_suites_in_order():
    results = run_verify(None, cases=2, n=10)
    assert [r.name for r in results] == list(SUITES)
    assert all(r.ok for r in results)


def test_run_verify_rejects_unknown_suite():
    with pytest.raises(ValueError):
        run_verify(["definitely_not_a_suite"])
