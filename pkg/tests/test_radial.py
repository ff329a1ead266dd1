import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import dblquad, quad
from scipy.special import jv

from crnet import radial as rad


def bessel_phi(rho, n):
    """Fourier transform of the unit-volume ball indicator via Bessel functions."""
    R = rad.ball_radius(n)
    rho = np.asarray(rho, dtype=float)
    safe = np.where(rho > 0, rho, 1.0)
    return np.where(rho > 0, R ** (n / 2) * safe ** (-n / 2) * jv(n / 2, 2 * np.pi * R * safe), 1.0)


def bessel_radial_density(rho, n):
    return rad.sphere_area(n) * rho ** (n - 1) * bessel_phi(rho, n) ** 2


# ------------------------------------------------------------------ targets


def test_target_validation():
    with pytest.raises(ValueError):
        rad.RadialTarget(2, 2, 1.0, (1, 0))
    with pytest.raises(ValueError):
        rad.RadialTarget(2, 2, 1.0, (1,))
    with pytest.raises(ValueError):
        rad.RadialTarget(0, 1, 1.0, (1,))
    with pytest.raises(ValueError):
        rad.RadialTarget(2, 1, 0.0, (1,))


def test_edges_and_values():
    t = rad.RadialTarget(2, 4, 1.0, (1, -1, 1, -1))
    np.testing.assert_allclose(t.edges, [2.0, 2.5, 3.0, 3.5, 4.0])
    x = np.zeros((6, 4))
    x[:, 0] = [1.0, 2.2, 2.7, 3.2, 3.7, 4.5]
    np.testing.assert_array_equal(rad.eval_target(t, x), [0, 1, -1, 1, -1, 0])


def test_shared_edge_belongs_to_lower_shell():
    t = rad.RadialTarget(2, 2, 1.0, (1, -1))
    x = np.array([3.0, 0, 0, 0])
    assert rad.eval_target(t, x) == 1.0


def test_zero_shells_is_identically_zero(rng):
    t = rad.RadialTarget(2, 0, 1.0)
    assert np.all(rad.eval_target(t, 3 * rng.standard_normal((50, 4))) == 0)


def test_target_json_round_trip():
    t = rad.RadialTarget.random(3, 5, 1.5, seed=2)
    assert rad.RadialTarget.from_json(t.to_json()) == t


@given(st.integers(1, 3), st.integers(1, 9), st.integers(0, 2 ** 31))
def test_target_is_radial(d, N, seed):
    rng = np.random.default_rng(seed)
    t = rad.RadialTarget.random(d, N, 1.0, seed)
    x = 4 * rng.standard_normal((20, 2 * d))
    q, _ = np.linalg.qr(rng.standard_normal((2 * d, 2 * d)))
    np.testing.assert_array_equal(rad.eval_target(t, x), rad.eval_target(t, x @ q.T))


# ------------------------------------------------------------------ surrogate


def test_surrogate_shape():
    t = rad.RadialTarget(1, 2, 1.0, (1, -1))
    s = rad.lipschitz_surrogate(t)
    a = t.inner_radius
    w = a / 2
    pts = np.array([a, a + 0.25 / 2, a + w / 2, a + w, a + 1.5 * w, 2 * a, 2.5 * a])
    x = np.stack([pts, np.zeros_like(pts)], axis=1)
    g = rad.eval_surrogate(s, x)
    expected = [0.0, 0.25, min(1.0, 2 * w / 2), 0.0, -min(1.0, 2 * w / 2), 0.0, 0.0]
    np.testing.assert_allclose(g, expected, atol=1e-12)


@given(st.integers(1, 3), st.integers(1, 8), st.integers(0, 2 ** 31))
def test_surrogate_is_lipschitz_and_bounded(d, N, seed):
    t = rad.RadialTarget.random(d, N, 1.0, seed)
    g = rad.surrogate_profile(rad.lipschitz_surrogate(t))
    r = np.linspace(0, 3 * t.inner_radius, 2001)
    v = np.array([g(s) for s in r])
    assert np.all(np.abs(v) <= 1)
    assert np.max(np.abs(np.diff(v)) / np.diff(r)) <= N * (1 + 1e-9)


# ------------------------------------------------------------------ density


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_phi_matches_bessel(n):
    rho = np.concatenate([[0.0], np.linspace(0.01, 60.0, 400)])
    np.testing.assert_allclose(rad.phi_profile(rho, n), bessel_phi(rho, n), atol=1e-12)


@pytest.mark.parametrize("n", [1, 3])
def test_phi_rejects_odd_dimension(n):
    with pytest.raises(ValueError):
        rad.phi_profile(1.0, n)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_ball_has_unit_volume(n):
    r = rad.ball_radius(n)
    assert rad.unit_ball_volume(n) * r ** n == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_density_mass_and_truncation(n):
    m = rad.build_density(n)
    full, _ = quad(bessel_radial_density, 0, m.r_trunc, args=(n,), limit=4000)
    assert m.mass == pytest.approx(full, abs=5e-5)
    assert 1 - m.mass == pytest.approx(m.tail_mass, rel=0.1)


def test_density_rejects_large_dimension():
    with pytest.raises(ValueError):
        rad.build_density(18)


def test_eval_phi_beyond_grid_scalar_and_array():
    m = rad.build_density(2)
    r = m.grid[-1] + 3.0
    assert isinstance(rad.eval_phi_radius(m, r), float)
    assert rad.eval_phi_radius(m, r) == pytest.approx(float(bessel_phi(r, 2)), abs=1e-12)
    out = rad.eval_phi_radius(m, np.array([0.5, r]))
    np.testing.assert_allclose(out, bessel_phi(np.array([0.5, r]), 2), atol=1e-9)


def test_planar_mass_against_cartesian_quadrature():
    # mu-mass of the unit disc in R^2, integrating phi^2 over x, y directly
    m = rad.build_density(2)
    phi2 = lambda y, x: float(bessel_phi(math.hypot(x, y), 2)) ** 2
    ref, _ = dblquad(phi2, -1, 1, lambda x: -math.sqrt(1 - x * x), lambda x: math.sqrt(1 - x * x),
                     epsabs=1e-10)
    assert rad.radial_cdf(m, 1.0) * m.mass == pytest.approx(ref, abs=1e-5)


def test_shell_mass_matches_sample_frequency():
    # d=2, C2=1: the annulus 2 <= |x| <= 4 in R^4
    ref, _ = quad(bessel_radial_density, 2.0, 4.0, args=(4,), limit=400)
    assert ref == pytest.approx(0.0775528, abs=1e-6)
    m = rad.build_density(4)
    X = rad.sample_mu(m, 200_000, seed=3)
    r = np.linalg.norm(X, axis=1)
    freq = np.mean((r >= 2) & (r <= 4))
    se = math.sqrt(ref * (1 - ref) / r.size)
    assert abs(freq - ref / m.mass) < 5 * se


def test_sampler_is_rotation_invariant():
    m = rad.build_density(4)
    X = rad.sample_mu(m, 100_000, seed=1)
    u = X / np.linalg.norm(X, axis=1, keepdims=True)
    assert np.max(np.abs(u.mean(axis=0))) < 5 / math.sqrt(X.shape[0])
    np.testing.assert_allclose(np.mean(u * u, axis=0), 0.25, atol=0.005)


def test_sampler_is_deterministic_per_seed():
    m = rad.build_density(2)
    np.testing.assert_array_equal(rad.sample_mu(m, 100, 5), rad.sample_mu(m, 100, 5))
    assert not np.array_equal(rad.sample_mu(m, 100, 5), rad.sample_mu(m, 100, 6))
    with pytest.raises(ValueError):
        rad.sample_mu(m, 0, 1)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_normalization_estimate(n):
    m = rad.build_density(n)
    est, se = rad.normalization_estimate(m, 200_000, seed=0)
    assert se < 0.005
    assert abs(est - m.mass) < 5 * se


def test_ks_distance_against_bessel_cdf():
    n = 2
    m = rad.build_density(n)
    X = rad.sample_mu(m, 50_000, seed=4)
    grid = np.linspace(0, m.r_trunc, 200_001)
    p = bessel_radial_density(grid, n)
    c = np.concatenate([[0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(grid))])
    ks = rad.ks_distance(np.linalg.norm(X, axis=1), lambda r: np.interp(r, grid, c / c[-1]))
    assert ks < 1.63 / math.sqrt(X.shape[0]) * 1.5


def test_ks_distance_detects_wrong_law(rng):
    ks = rad.ks_distance(rng.uniform(0, 1, 10_000), lambda r: np.clip(r, 0, 1) ** 2)
    assert ks > 0.2


def test_surrogate_gap_within_bound():
    t = rad.RadialTarget.alternating(2, 8, 1.0)
    m = rad.build_density(4)
    sq, se = rad.l2_mu_distance(lambda X: rad.eval_target(t, X),
                                lambda X: rad.eval_surrogate(rad.lipschitz_surrogate(t), X), m, 200_000, 0)
    assert sq + 5 * se <= 3 / math.sqrt(4)
    assert sq > 0


def test_write_samples_csv(tmp_path):
    path = tmp_path / "s.csv"
    rad.write_samples_csv(path, np.array([[0.1, 0.2], [0.3, 0.4]]))
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1"
    assert len(lines) == 3
