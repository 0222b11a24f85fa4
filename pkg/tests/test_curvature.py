"""Curvature bounds, smoothing transforms, and their envelopes."""

import numpy as np
import pytest

from urom.curvature import (CurvatureProfile, EnvelopeSum, HolderEnvelope,
                            LogOrthantMetric, NormedMetric,
                            check_quadratic_growth, gcb_estimate,
                            holder_kappa_envelope, holder_sigma_constant,
                            holder_sigma_envelope, pointwise_delta, sigma_hat,
                            sigma_hat_inverse, sigma_hat_prime)
from urom.errors import SamplingError
from urom.space import Ball, Box, EuclideanSpace

ABS = NormedMetric(norm=lambda v: float(np.max(np.abs(np.atleast_1d(v)))))


def test_scalar_square_pair_value():
    # f(x) = x^2 deviates from its chord by exactly (y-x)^2 t(1-t);
    # dense-grid oracle value 0.640000000000878 (tests/_oracles.py)
    fn = lambda z: np.array([float(np.atleast_1d(z)[0]) ** 2])
    d = pointwise_delta(fn, np.array([0.3]), np.array([1.1]), ABS)
    assert d == pytest.approx(0.64, rel=1e-9)


def test_scalar_square_profile_is_r_squared():
    fn = lambda z: np.array([float(np.atleast_1d(z)[0]) ** 2])
    grid = np.linspace(0.1, 2.0, 20)
    prof = gcb_estimate(fn, ABS, grid, Box(np.array([-3.0]), np.array([3.0])),
                        n_pairs=8, seed=0)
    assert np.allclose(prof.kappa_values, grid ** 2, rtol=1e-9)


def test_affine_map_has_zero_curvature():
    rng = np.random.default_rng(2)
    G = rng.standard_normal((3, 3))
    c = rng.standard_normal(3)
    met = NormedMetric(norm=lambda v: float(np.linalg.norm(v)))
    prof = gcb_estimate(lambda x: c + G @ x, met, np.linspace(0.2, 1.0, 5),
                        Ball(np.zeros(3), 2.0), n_pairs=8, seed=1)
    assert float(np.max(prof.kappa_values)) <= 1e-12


def test_gcb_estimate_is_deterministic():
    fn = lambda x: np.array([x[0] ** 2 - x[1], x[0] * x[1]])
    met = NormedMetric(norm=lambda v: float(np.linalg.norm(v)))
    grid = np.linspace(0.1, 0.8, 6)
    dom = Ball(np.zeros(2), 1.0)
    a = gcb_estimate(fn, met, grid, dom, n_pairs=12, seed=9)
    b = gcb_estimate(fn, met, grid, dom, n_pairs=12, seed=9)
    assert np.array_equal(a.kappa_values, b.kappa_values)


def test_sampling_failure_raises():
    met = NormedMetric(norm=lambda v: float(np.linalg.norm(v)))
    # pairs at distance 3 cannot fit in a ball of diameter 1
    with pytest.raises(SamplingError):
        gcb_estimate(lambda x: x, met, np.array([3.0]),
                     Ball(np.zeros(2), 0.5), n_pairs=4, seed=0)


def test_quadratic_growth_analytic_profiles():
    r = np.linspace(0.05, 2.0, 40)
    for kfn in (lambda t: t ** 2, lambda t: t ** 1.5, lambda t: 3 * t ** 2):
        prof = CurvatureProfile.from_function(kfn, r)
        rep = check_quadratic_growth(prof, betas=(0.25, 0.5, 0.75), tol=1e-9)
        assert rep.passed, rep.worst_margin

    # a profile growing faster than r^2 violates the bound
    bad = CurvatureProfile.from_function(lambda t: t ** 2 + 0.5 * t ** 3, r)
    assert not check_quadratic_growth(bad, tol=1e-9).passed


def test_smoothing_quadrature_values():
    # frozen by scipy quadrature in tests/_oracles.py
    prof = CurvatureProfile.from_function(lambda t: t * t, np.linspace(0.01, 2.5, 120))
    assert sigma_hat(1, prof, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-8)
    assert sigma_hat(2, prof, 1.0) == pytest.approx(0.08333333333333334, abs=1e-8)
    assert sigma_hat_prime(2, prof, 1.0) == pytest.approx(1.0 / 3.0, abs=1e-8)
    assert sigma_hat_prime(1, prof, 1.0) == pytest.approx(1.0, abs=1e-9)

    prof15 = CurvatureProfile.from_function(lambda t: t ** 1.5, np.linspace(0.01, 2.5, 120))
    assert sigma_hat(2, prof15, 2.0) == pytest.approx(1.2929952570212895, rel=1e-6)
    assert sigma_hat_prime(2, prof15, 2.0) == pytest.approx(2.26274169978128, rel=1e-6)


def test_sigma_growth_exponent():
    # sigma_q(beta r) >= beta^(q+2) sigma_q(r) for growth-compliant kappa
    prof = CurvatureProfile.from_function(lambda t: 2.0 * t ** 1.7,
                                          np.linspace(0.01, 3.0, 160))
    rng = np.random.default_rng(4)
    for q in (1, 2):
        for _ in range(60):
            r = rng.uniform(0.2, 2.8)
            beta = rng.uniform(0.1, 0.95)
            lhs = sigma_hat(q, prof, beta * r)
            rhs = beta ** (q + 2) * sigma_hat(q, prof, r)
            assert lhs >= rhs - 1e-9


def test_compat_sandwich():
    prof = CurvatureProfile.from_function(lambda t: t * t, np.linspace(0.01, 2.0, 120))
    for q in (1, 2):
        for r in np.linspace(0.1, 1.9, 30):
            s = sigma_hat(q, prof, r)
            sp = sigma_hat_prime(q, prof, r)
            assert s <= r * sp + 1e-10
            assert r * sp <= (q + 2) * s + 1e-9


def test_two_point_derivative_bound():
    # sigma_q'(r) <= sigma_q'(s) + sigma_q'(s)/s^(q+1) * r^(q+1), any r, s
    prof = CurvatureProfile.from_function(lambda t: 3.0 * t ** 2,
                                          np.linspace(0.01, 3.0, 150))
    rng = np.random.default_rng(8)
    for q in (1, 2):
        for _ in range(100):
            r, s = rng.uniform(0.1, 2.9, 2)
            lhs = sigma_hat_prime(q, prof, r)
            base = sigma_hat_prime(q, prof, s)
            assert lhs <= base + base / s ** (q + 1) * r ** (q + 1) + 1e-8


def test_holder_envelope_closed_forms():
    assert holder_kappa_envelope(1.0, 2.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert holder_kappa_envelope(0.0, 1.0, 3.0) == pytest.approx(6.0, abs=1e-14)
    assert holder_sigma_envelope(1, 1.0, 1.0, 2.0) == pytest.approx(2.0, abs=1e-14)
    assert holder_sigma_envelope(2, 0.0, 3.0, 1.0) == pytest.approx(3.0, abs=1e-14)
    # constant chains down the integer ladder: c_{p,nu} = 2^(1-nu)/prod(i+nu)
    assert holder_sigma_constant(2, 1.0) == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_holder_envelope_object_consistency():
    env = HolderEnvelope(1, 1.0, 2.0)
    r = np.linspace(0.05, 2.0, 30)
    for ri in r:
        assert env.sigma(ri) == pytest.approx(holder_sigma_envelope(1, 1.0, 2.0, ri),
                                              rel=1e-13)
        assert env.sigma(ri) <= ri * env.sigma_prime(ri) + 1e-12
        assert ri * env.sigma_prime(ri) <= 3.0 * env.sigma(ri) + 1e-12
    y = env.sigma(1.3)
    assert float(env.sigma_inverse(y)) == pytest.approx(1.3, rel=1e-10)


def test_sigma_hat_inverse_profile_and_saturation():
    prof = CurvatureProfile.from_function(lambda t: t * t, np.linspace(0.01, 1.5, 100))
    # sigma_1(r) = r^3/3 so the inverse of 1/3 is 1
    inv = sigma_hat_inverse(1, prof, 1.0 / 3.0)
    assert float(inv) == pytest.approx(1.0, rel=1e-6)
    assert not inv.saturated
    big = sigma_hat_inverse(1, prof, 50.0)
    assert big.saturated
    assert float(big) == pytest.approx(prof.r_max, rel=1e-12)


def test_envelope_sum_dominates_parts():
    e1 = HolderEnvelope(1, 0.3, 1.2)
    e2 = HolderEnvelope(1, 1.0, 0.7)
    tot = EnvelopeSum([e1, e2])
    for r in np.linspace(0.1, 2.0, 25):
        assert tot.sigma(r) == pytest.approx(e1.sigma(r) + e2.sigma(r), rel=1e-13)
        y = tot.sigma(r)
        assert float(tot.sigma_inverse(y)) == pytest.approx(r, rel=1e-8)


def test_log_orthant_metric_identities():
    met = LogOrthantMetric()
    rng = np.random.default_rng(21)
    for _ in range(40):
        x = np.exp(rng.uniform(-1.5, 1.5, 4))
        y = np.exp(rng.uniform(-1.5, 1.5, 4))
        d = met.dist(x, y)
        s, t = sorted(rng.uniform(0.0, 1.0, 2))
        gs, gt = met.geodesic(x, y, s), met.geodesic(x, y, t)
        assert met.dist(gs, gt) == pytest.approx((t - s) * d, abs=1e-10)
        z = met.shoot(x, rng.standard_normal(4), 0.7)
        assert met.dist(x, z) == pytest.approx(0.7, abs=1e-12)


def test_power_map_is_log_geodesically_affine():
    # x -> x^a is linear after taking logs, so its curvature in the
    # log-orthant metric vanishes even though it is curved in the flat metric
    met = LogOrthantMetric()
    fn = lambda x: np.asarray(x, dtype=float) ** 0.5
    prof = gcb_estimate(fn, met, np.linspace(0.2, 1.0, 5),
                        Box(0.5 * np.ones(3), 2.0 * np.ones(3)), n_pairs=8, seed=3)
    assert float(np.max(prof.kappa_values)) <= 1e-12
    flat = NormedMetric(norm=lambda v: float(np.linalg.norm(v)))
    prof_flat = gcb_estimate(fn, (flat, flat), np.linspace(0.2, 1.0, 5),
                             Box(0.5 * np.ones(3), 2.0 * np.ones(3)),
                             n_pairs=8, seed=3)
    assert float(np.max(prof_flat.kappa_values)) > 1e-3
