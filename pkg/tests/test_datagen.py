import math

import numpy as np
import pytest

from distcp.datagen import (EXAMPLES, Cov, ScenarioError, ScenarioSpec, gaussian, iid_t,
                            l1_ball_radius, l2_ball_radius, make_scenario, mgsn,
                            multivariate_t, uniform_cube, uniform_l1_ball, uniform_l2_ball)


def test_gaussian_mean():
    x = gaussian(100_000, 1, seed=0)
    assert abs(x.mean()) <= 0.02


def test_ar1_correlation():
    x = gaussian(100_000, 3, cov=Cov.ar1(0.9), seed=1)
    assert np.corrcoef(x[:, 0], x[:, 2])[0, 1] == pytest.approx(0.81, abs=0.02)
    assert x.var(axis=0) == pytest.approx(np.ones(3), abs=0.03)


def test_scaled_identity_variance():
    x = gaussian(2000, 200, cov=Cov.identity(1.3), seed=2)
    assert x.var(axis=0).mean() == pytest.approx(1.3, abs=0.03)


def test_diagonal_covariance():
    x = gaussian(50_000, 4, cov=Cov.diagonal([1, 1, 3, 3]), seed=3)
    assert x.var(axis=0) == pytest.approx([1, 1, 3, 3], rel=0.05)


def test_t_moments():
    x = iid_t(1000, 1000, 4, seed=4)
    assert x.var() == pytest.approx(2.0, abs=0.05)
    assert abs(x.mean()) <= 0.01


def test_example3_variances_match_but_l1_energy_differs():
    n, d = 2000, 500
    a1, a2 = (gaussian(n, d, cov=Cov.identity(2.0), seed=s).ravel() for s in (5, 6))
    b1, b2 = (iid_t(n, d, 4, seed=s).ravel() for s in (7, 8))
    assert a1.var() == pytest.approx(2.0, abs=0.02)
    assert b1.var() == pytest.approx(2.0, abs=0.05)
    # coordinatewise l1 energy 2E|X-Y| - E|X-X'| - E|Y-Y'|, about 0.0125 here
    gap = 2 * np.abs(a1 - b1).mean() - np.abs(a1 - a2).mean() - np.abs(b1 - b2).mean()
    assert gap > 0.005


def test_multivariate_t_dependence():
    z = multivariate_t(100_000, 2, 3, seed=7)
    assert np.corrcoef(z[:, 0] ** 2, z[:, 1] ** 2)[0, 1] > 0.1
    assert abs(np.corrcoef(z[:, 0], z[:, 1])[0, 1]) < 0.02
    assert abs(np.median(z)) <= 0.05


def test_multivariate_t_gaussian_limit():
    z = multivariate_t(500, 5000, 1000, seed=8)
    r = np.linalg.norm(z, axis=1) / math.sqrt(5000)
    assert np.mean(np.abs(r - 1) <= 0.05) >= 0.95
    assert abs(r.mean() - 1) <= 0.01


def test_mgsn_p1_is_gaussian():
    assert np.array_equal(mgsn(30, 4, 1.0, mu=0.5, seed=9), gaussian(30, 4, mu=0.5, seed=9))


def test_mgsn_moments():
    x, counts = mgsn(100_000, 2, 0.2, seed=10, return_counts=True)
    assert counts.mean() == pytest.approx(5.0, abs=0.05)
    assert x.var(axis=0) == pytest.approx([5.0, 5.0], abs=0.15)
    assert np.abs(x.mean(axis=0)).max() <= 0.05


def test_radii_closed_forms():
    assert l2_ball_radius(2) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-14)
    assert l1_ball_radius(2) == pytest.approx(math.sqrt(2), rel=1e-14)
    assert l2_ball_radius(1) == pytest.approx(1.0, rel=1e-14)
    assert l1_ball_radius(1) == pytest.approx(1.0, rel=1e-14)
    # d = 3: (4/3) pi r^3 = 8 and (4/3) r^3 = 8
    assert l2_ball_radius(3) == pytest.approx((6 / math.pi) ** (1 / 3), rel=1e-12)
    assert l1_ball_radius(3) == pytest.approx(6 ** (1 / 3), rel=1e-12)
    radii = [l2_ball_radius(d) for d in (256, 512, 1024, 2048)]
    assert all(math.isfinite(r) for r in radii) and radii == sorted(radii)
    for d in (200, 1000):
        assert math.isfinite(l2_ball_radius(d)) and math.isfinite(l1_ball_radius(d))


def test_uniform_supports_and_area_ratios():
    n = 100_000
    c = uniform_cube(n, 3, 2.0, seed=11)
    assert np.abs(c).max() <= 2.0
    r2 = l2_ball_radius(2)
    b2 = uniform_l2_ball(n, 2, seed=12)
    norm2 = np.linalg.norm(b2, axis=1)
    assert norm2.max() <= r2
    assert np.mean(norm2 <= r2 / 2) == pytest.approx(0.25, abs=0.01)
    r1 = l1_ball_radius(2)
    b1 = uniform_l1_ball(n, 2, seed=13)
    norm1 = np.abs(b1).sum(axis=1)
    assert norm1.max() <= r1 * (1 + 1e-12)
    assert np.mean(norm1 <= r1 / 2) == pytest.approx(0.25, abs=0.01)
    # signs are balanced in every quadrant
    q = np.mean((b1[:, 0] > 0) & (b1[:, 1] > 0))
    assert q == pytest.approx(0.25, abs=0.01)


def test_explicit_radius_and_errors():
    assert np.linalg.norm(uniform_l2_ball(50, 3, 0.5, seed=0), axis=1).max() <= 0.5
    with pytest.raises(ScenarioError):
        uniform_l2_ball(5, 2, -1.0)
    with pytest.raises(ScenarioError):
        mgsn(5, 2, 0.0)
    with pytest.raises(ScenarioError):
        Cov.ar1(1.0)


def test_example1_segment_means():
    sc = make_scenario(ScenarioSpec(1, seed=0))
    assert sc.data.shape == (50, 200)
    assert sc.change_points == (25,)
    gap = sc.data[25:].mean() - sc.data[:25].mean()
    assert gap == pytest.approx(0.3, abs=0.05)


def test_example5_sparse_count():
    sc = make_scenario(ScenarioSpec(5, n=2000, d=1024, tau=1000, beta=0.6, seed=1))
    shift = sc.data[1000:].mean(axis=0) - sc.data[:1000].mean(axis=0)
    shifted = np.flatnonzero(shift > 0.5)
    assert shifted.tolist() == list(range(64))


@pytest.mark.parametrize("tau", [0, 50, (30, 20)])
def test_bad_change_points(tau):
    ex = 13 if np.ndim(tau) else 1
    with pytest.raises(ScenarioError):
        make_scenario(ScenarioSpec(ex, tau=tau))


def test_every_example_generates_deterministically():
    for ex in EXAMPLES:
        spec = ScenarioSpec(ex, d=20, seed=3)
        a, b = make_scenario(spec), make_scenario(spec)
        assert np.array_equal(a.data, b.data)
        assert a.data.shape == (EXAMPLES[ex].n, 20)
        assert np.all(np.isfinite(a.data))
        assert len(a.change_points) == len(EXAMPLES[ex].segments) - 1
    assert not np.array_equal(make_scenario(ScenarioSpec(1, seed=1)).data,
                              make_scenario(ScenarioSpec(1, seed=2)).data)
