import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftflow.certify import (ball_sampler, check_decay_inequality, estimate_growth,
                            estimate_lipschitz, fit_exponential_rate)
from ftflow.experiments import sweep_direction, ExperimentConfig
from ftflow.field import LyapunovConstants, VectorField, linear_field
from ftflow.integrate import IntegrateOptions, integrate
from ftflow.scaling import fixed_decay_constants, fixed_scale


@pytest.mark.parametrize("rho", [0.1, 1.0, 10.0])
def test_rate_of_sampled_exponential(rho):
    t = np.linspace(0.0, 5.0 / rho, 200)
    z = 3.0 * np.exp(-rho * t)[:, None] * np.array([[1.0, -2.0]])
    est = fit_exponential_rate((t, z), np.zeros(2))
    assert est.rho_hat == pytest.approx(rho, rel=1e-10)
    assert est.M_hat == pytest.approx(1.0, rel=1e-8)
    assert est.r2 == pytest.approx(1.0) and est.accepted


def test_rate_of_integrated_decay():
    tr = integrate(linear_field(-2.0 * np.eye(3)), [1.0, 2.0, 3.0],
                   IntegrateOptions(t_max=5.0, record_stride="all"))
    est = fit_exponential_rate(tr, np.zeros(3))
    assert est.rho_hat == pytest.approx(2.0, rel=1e-5)


def test_rate_fit_rejects_growth_and_short_series():
    t = np.linspace(0, 1, 50)
    with pytest.raises(ValueError):
        fit_exponential_rate((t, np.exp(t)), [0.0])
    with pytest.raises(ValueError):
        fit_exponential_rate((t[:5], np.exp(-t[:5])), [0.0])
    with pytest.raises(ValueError):
        fit_exponential_rate((t, np.exp(-t)), [0.0], tail=0.0)


def test_pal_tail_is_exponential(lasso_setup):
    cfg = ExperimentConfig("fused_lasso", seed=0, n=40)
    u = sweep_direction(cfg, lasso_setup)
    opts = IntegrateOptions(t_max=3000.0, settle_target=lasso_setup.z_star, settle_delta=1e-7)
    tr = integrate(lasso_setup.field, lasso_setup.z_star + u, opts)
    est = fit_exponential_rate(tr, lasso_setup.z_star, tail=0.5)
    assert est.r2 >= 0.99 and est.rho_hat > 0


def test_ball_sampler_radius_and_nesting():
    center = np.array([1.0, -1.0, 2.0])
    sample = ball_sampler(center, 5.0, seed=3)
    a, b = sample(100), sample(400)
    np.testing.assert_array_equal(a, b[:100])
    r = np.linalg.norm(b - center, axis=1)
    assert np.all(r <= 5.0) and np.all(r >= 5e-8)
    assert r.min() < 1e-3 and r.max() > 1.0
    np.testing.assert_array_equal(sample(10), ball_sampler(center, 5.0, seed=3)(10))
    assert not np.array_equal(sample(10), ball_sampler(center, 5.0, seed=4)(10))


def _power_norm(M, iters=500):
    v = np.ones(M.shape[1])
    for _ in range(iters):
        v = M.T @ (M @ v)
        v /= np.linalg.norm(v)
    return float(np.sqrt(np.linalg.norm(M.T @ (M @ v))))


def test_lipschitz_identity_and_constant():
    sample = ball_sampler(np.zeros(4), 10.0)
    assert estimate_lipschitz(linear_field(-np.eye(4)), sample, 50) == pytest.approx(1.0)
    const = VectorField(4, lambda z: np.ones(4))
    assert estimate_lipschitz(const, sample, 50) == 0.0


def test_lipschitz_of_linear_field_is_tight_lower_bound(rng):
    Q = rng.standard_normal((3, 3))
    oracle = _power_norm(Q)
    est = estimate_lipschitz(linear_field(Q), ball_sampler(np.zeros(3), 1.0, seed=1), 1000)
    assert est <= oracle * (1 + 1e-12)
    assert est >= 0.9 * oracle


def test_lipschitz_is_monotone_in_pair_count(rng):
    Q = rng.standard_normal((5, 5))
    sample = ball_sampler(np.zeros(5), 1.0, seed=2)
    ests = [estimate_lipschitz(linear_field(Q), sample, k) for k in (10, 100, 1000)]
    assert ests[0] <= ests[1] <= ests[2]


def test_growth_of_linear_fields(rng):
    g = estimate_growth(linear_field(-np.eye(3)), np.zeros(3),
                        ball_sampler(np.zeros(3), 10.0), 200)
    assert g.beta_hat == pytest.approx(1.0) and g.m_hat == pytest.approx(1.0)
    Q = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
    smin = np.linalg.svd(Q, compute_uv=False)[-1]
    g = estimate_growth(linear_field(Q), np.zeros(3), ball_sampler(np.zeros(3), 10.0), 500)
    assert g.beta_hat == pytest.approx(1.0, abs=0.02)
    assert g.m_hat >= 0.5 * smin
    assert g.sample_count == 500


def test_growth_of_cubic_field():
    center = np.array([1.0, 2.0])
    F = VectorField(2, lambda z: -np.linalg.norm(z - center) ** 2 * (z - center))
    g = estimate_growth(F, center, ball_sampler(center, 1.0, decades=4), 300)
    assert g.beta_hat == pytest.approx(3.0, rel=1e-6)
    assert g.m_hat == pytest.approx(1.0, rel=1e-4)


def test_growth_rejects_vanishing_field():
    zero = VectorField(2, lambda z: np.zeros(2))
    with pytest.raises(ValueError):
        estimate_growth(zero, np.zeros(2), ball_sampler(np.zeros(2), 1.0), 20)


def test_decay_exact_exponential():
    t = np.linspace(0, 3, 300)
    V = np.exp(-2 * t)
    rep = check_decay_inequality(t, V, 2.0, 1.0, 0.0, 2.0)
    assert rep.checked == 298 and rep.violations == 0


def test_decay_scalar_fixed_time_flow():
    # V = x^2 along x' = -(|x|^-1/2 + |x|^3) x gives dV/dt = -2 V^3/4 - 2 V^5/2
    k = LyapunovConstants(k1=1.0, k2=1.0, k3=2.0, L=1.0, m=1.0, beta=1.0)
    c1, a1, c2, a2 = fixed_decay_constants(k, 1.0, 1.0, 0.5, 3.0)
    assert (c1, a1, c2, a2) == (2.0, 0.75, 2.0, 2.5)
    tr = integrate(fixed_scale(linear_field(-np.eye(1)), 1.0, 1.0, 0.5, 3.0), [3.0],
                   IntegrateOptions(t_max=3.0, max_displacement=1e-3))
    V = tr.states[:, 0] ** 2
    assert check_decay_inequality(tr, V, c1, a1, c2, a2).fraction <= 0.01
    inflated = check_decay_inequality(tr, V, 100 * c1, a1, 100 * c2, a2)
    assert inflated.fraction > 0.5 and inflated.worst_margin > 0


def test_decay_input_checks():
    with pytest.raises(ValueError):
        check_decay_inequality(np.arange(3.0), np.ones(4), 1, .5, 1, 2)
    with pytest.raises(ValueError):
        check_decay_inequality(np.arange(2.0), np.ones(2), 1, .5, 1, 2)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(0.1, 10.0))
def test_rate_fit_recovers_any_rate(rho, amp):
    t = np.linspace(0.0, 4.0 / rho, 64)
    est = fit_exponential_rate((t, amp * np.exp(-rho * t)), [0.0])
    assert est.rho_hat == pytest.approx(rho, rel=1e-8)
