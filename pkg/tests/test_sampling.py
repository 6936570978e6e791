import numpy as np
import pytest
from scipy import stats

from hullpeel.limits import RadialDensity
from hullpeel.peeling import peel
from hullpeel.sampling import (
    RNG_ALGORITHM,
    SamplerSpec,
    poisson_rectangle,
    sample,
    trial_rng,
)

BALL = RadialDensity("uniform_ball")


def test_rng_algorithm_is_recorded():
    assert RNG_ALGORITHM == "philox4x32+seedsequence"


def test_trial_rng_streams_are_independent_and_replayable():
    a = trial_rng(7, 0).random(5)
    b = trial_rng(7, 0).random(5)
    c = trial_rng(7, 1).random(5)
    d = trial_rng(8, 0).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    assert not np.array_equal(trial_rng(7, 0, 3).random(5), a)


def test_spec_validation():
    with pytest.raises(ValueError):
        SamplerSpec("grid", 10, BALL, 0)
    with pytest.raises(ValueError):
        SamplerSpec("iid", 0, BALL, 0)
    with pytest.raises(ValueError):
        SamplerSpec("iid", 2.5, BALL, 0)
    with pytest.raises(ValueError):
        SamplerSpec("poisson", -1.0, BALL, 0)


def test_iid_mode_draws_exactly_n_points():
    cloud = sample(SamplerSpec("iid", 7, BALL, 3))
    assert cloud.shape == (7, 2)
    assert np.all(np.linalg.norm(cloud, axis=1) <= 1.0)


def test_zero_mass_density_yields_empty_cloud():
    dead = RadialDensity(
        "table", table_r=np.array([0.0, 1.0]), table_f=np.array([0.0, 0.0])
    )
    cloud = sample(SamplerSpec("poisson", 50.0, dead, 1))
    assert cloud.shape == (0, 2)


def test_replay_determinism():
    spec = SamplerSpec("poisson", 500.0, BALL, 12)
    assert np.array_equal(sample(spec, 4), sample(spec, 4))
    assert np.array_equal(sample(spec, (2, 9)), sample(spec, (2, 9)))
    assert not np.array_equal(sample(spec, 4), sample(spec, 5))


def test_poisson_counts_pass_a_chi_square_test():
    # counts over 1000 draws vs the Poisson(1000) law, pooled into
    # equiprobable bins, acceptance at the 1% level
    m = 1000.0
    spec = SamplerSpec("poisson", m, BALL, 77)
    counts = np.array([len(sample(spec, t)) for t in range(1000)])
    assert abs(counts.mean() - m) < 5 * np.sqrt(m / len(counts))
    qs = np.linspace(0, 1, 21)[1:-1]
    edges = np.unique(stats.poisson.ppf(qs, m))
    bins = np.concatenate([[-np.inf], edges, [np.inf]])
    observed, _ = np.histogram(counts, bins=bins)
    cdf = np.concatenate([[0.0], stats.poisson.cdf(edges, m), [1.0]])
    expected = len(counts) * np.diff(cdf)
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    assert chi2 < stats.chi2.ppf(0.99, len(observed) - 1)


def test_poisson_positions_match_iid_positions():
    # given its count, a poisson-mode cloud is an iid draw from the same
    # density: pooled radii from both modes pass a two-sample KS at 1%
    pool_p, pool_i = [], []
    for t in range(40):
        pool_p.append(np.linalg.norm(sample(SamplerSpec("poisson", 200.0, BALL, 5), t), axis=1))
        pool_i.append(np.linalg.norm(sample(SamplerSpec("iid", 200, BALL, 6), t), axis=1))
    stat = stats.ks_2samp(np.concatenate(pool_p), np.concatenate(pool_i))
    assert stat.pvalue > 0.01


def test_poisson_iid_bridge_on_max_depth():
    # the depth statistic cannot tell the two modes apart at matched size
    depths_p = []
    depths_i = []
    for t in range(60):
        depths_p.append(peel(sample(SamplerSpec("poisson", 2000.0, BALL, 31), t)).num_layers)
        depths_i.append(peel(sample(SamplerSpec("iid", 2000, BALL, 32), t)).num_layers)
    stat = stats.ks_2samp(depths_p, depths_i)
    assert stat.pvalue > 0.01


def test_uniform_ball_radii_law():
    cloud = sample(SamplerSpec("iid", 4000, RadialDensity("uniform_ball", radius=2.0), 9))
    r = np.linalg.norm(cloud, axis=1)
    assert r.max() <= 2.0
    stat = stats.kstest((r / 2.0) ** 2, "uniform")
    assert stat.pvalue > 0.01


def test_gaussian_sampler_matches_standard_normal():
    cloud = sample(SamplerSpec("iid", 4000, RadialDensity("gaussian"), 10))
    stat = stats.kstest(cloud.reshape(-1), "norm")
    assert stat.pvalue > 0.01


def test_table_sampler_follows_the_radial_mass():
    # triangular radial profile: mass(r) = 3r^2 - 2r^3 on [0, 1]
    dens = RadialDensity(
        "table", table_r=np.array([0.0, 1.0]), table_f=np.array([3 / np.pi, 0.0])
    )
    cloud = sample(SamplerSpec("iid", 4000, dens, 11))
    r = np.linalg.norm(cloud, axis=1)
    stat = stats.kstest(r, lambda v: 3 * v**2 - 2 * v**3)
    assert stat.pvalue > 0.01


def test_frame_sampler_has_requested_covariance():
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    mean = np.array([0.5, -1.0])
    dens = RadialDensity.from_config(
        {
            "kind": "gaussian",
            "dim": 2,
            "cov": " ".join(str(float(v)) for v in cov.reshape(-1)),
            "mean": " ".join(str(float(v)) for v in mean),
        }
    )
    cloud = sample(SamplerSpec("iid", 20000, dens, 13))
    assert np.allclose(cloud.mean(axis=0), mean, atol=0.05)
    assert np.allclose(np.cov(cloud.T), cov, atol=0.1)


def test_three_dimensional_sampling():
    cloud = sample(SamplerSpec("iid", 500, RadialDensity("uniform_ball", dim=3), 2))
    assert cloud.shape == (500, 3)
    assert np.all(np.linalg.norm(cloud, axis=1) <= 1.0)


def test_poisson_rectangle_bounds_and_intensity():
    rng = trial_rng(0, 0)
    pts = poisson_rectangle(rng, -2.0, 3.0, 0.0, 1.0, intensity=40.0)
    assert np.all((pts[:, 0] > -2.0) & (pts[:, 0] < 3.0))
    assert np.all((pts[:, 1] > 0.0) & (pts[:, 1] < 1.0))
    counts = [
        len(poisson_rectangle(trial_rng(1, t), 0.0, 10.0, 0.0, 10.0)) for t in range(200)
    ]
    assert abs(np.mean(counts) - 100.0) < 5 * np.sqrt(100.0 / len(counts))
    with pytest.raises(ValueError):
        poisson_rectangle(rng, 1.0, 0.0, 0.0, 1.0)
