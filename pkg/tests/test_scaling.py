import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftflow.field import LyapunovConstants, linear_field
from ftflow.scaling import (ZERO_BAND, ScalingParams, finite_scale, fixed_decay_constants,
                            fixed_scale, lemma2_bound, lemma3_bound, scaling_bound, sigma_value,
                            thm1_bound, thm2_bound)

K = LyapunovConstants(k1=1.0, k2=1.0, k3=2.0, L=1.0, m=1.0, beta=1.0)


def test_sigma_values():
    assert sigma_value(ScalingParams("none"), 5.0) == 1.0
    assert sigma_value(ScalingParams("finite", eta=2.0, lam=0.5), 4.0) == pytest.approx(1.0)
    fixed = ScalingParams("fixed", eta1=1.0, eta2=1.0, lambda1=0.5, lambda2=3.0)
    assert sigma_value(fixed, 4.0) == pytest.approx(0.5 + 64.0)


def test_scaled_field_applies_sigma():
    F = linear_field(-np.eye(2))
    G = finite_scale(F, eta=1.0, lam=0.5)
    z = np.array([3.0, 4.0])
    np.testing.assert_allclose(G(z), -z / np.sqrt(5.0))
    g, fn, sg = G.evaluate(z)
    assert fn == pytest.approx(5.0) and sg == pytest.approx(5.0 ** -0.5)


def test_sigma_zero_inside_band():
    G = fixed_scale(linear_field(-np.eye(1)), 1.0, 1.0, 0.5, 3.0)
    np.testing.assert_array_equal(G(np.array([0.5 * ZERO_BAND])), [0.0])
    np.testing.assert_array_equal(G(np.zeros(1)), [0.0])


@pytest.mark.parametrize("kw", [dict(eta=0.0), dict(lam=0.0), dict(lam=1.0)])
def test_finite_parameters_validated(kw):
    with pytest.raises(ValueError):
        finite_scale(linear_field(-np.eye(1)), **kw)


@pytest.mark.parametrize("kw", [dict(eta1=0.0), dict(lambda1=1.0), dict(lambda2=0.0)])
def test_fixed_parameters_validated(kw):
    with pytest.raises(ValueError):
        fixed_scale(linear_field(-np.eye(1)), **kw)


def test_unknown_variant():
    with pytest.raises(ValueError):
        ScalingParams("weird")


def test_thm1_scalar_values():
    assert float(thm1_bound(K, 1.0, 0.5, 1.0)) == pytest.approx(2.0)
    assert float(thm1_bound(K, 1.0, 0.5, 10.0)) == pytest.approx(2 * np.sqrt(10.0))


def test_thm2_scalar_value():
    b = thm2_bound(K, 1.0, 1.0, 0.5, 3.0)
    assert b.value == pytest.approx(13.0 / 3.0, rel=1e-14)
    assert b.kind == "fixed_thm2"
    assert b.inputs_echo["lambda2"] == 3.0


def test_fig3_parameters_bound():
    # (eta1, eta2, lambda1, lambda2) = (10, 1, 1/2, 3): 2/2 * (2/5 + 1/3)
    assert float(thm2_bound(K, 10.0, 1.0, 0.5, 3.0)) == pytest.approx(0.4 + 1.0 / 3.0)


def test_thm2_relates_to_lemma3_through_decay_constants():
    # with k2 = 1 the uniform bound counts the finite-time term twice
    k = LyapunovConstants(k1=0.5, k2=1.0, k3=3.0, L=2.0, m=0.5, beta=1.5)
    c1, a1, c2, a2 = fixed_decay_constants(k, 2.0, 0.5, 0.4, 2.0)
    lemma = float(lemma3_bound(c1, a1, c2, a2))
    assert float(thm2_bound(k, 2.0, 0.5, 0.4, 2.0)) == pytest.approx(
        lemma + 1.0 / (c1 * (1.0 - a1)), rel=1e-13)


def test_scalar_decay_constants():
    assert fixed_decay_constants(K, 1.0, 1.0, 0.5, 3.0) == pytest.approx((2.0, 0.75, 2.0, 2.5))


def test_lemma2_value():
    assert float(lemma2_bound(4.0, 2.0, 0.5)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        lemma2_bound(1.0, 1.0, 1.0)


def test_lemma3_validation():
    with pytest.raises(ValueError):
        lemma3_bound(1.0, 0.5, 1.0, 1.0)


def test_scaling_bound_dispatch():
    assert scaling_bound(ScalingParams("none"), K, 1.0) is None
    assert float(scaling_bound(ScalingParams("finite", eta=1.0, lam=0.5), K, 4.0)) == pytest.approx(4.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-8, 1e8), st.floats(0.01, 10), st.floats(0.01, 0.99))
def test_finite_sigma_positive_and_monotone(fn, eta, lam):
    p = ScalingParams("finite", eta=eta, lam=lam)
    s1, s2 = sigma_value(p, fn), sigma_value(p, 2 * fn)
    assert s1 > 0 and s2 < s1


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(0.01, 0.99), st.floats(0.01, 5))
def test_scaled_norm_law(fn, lam, eta):
    # ||sigma F|| = eta ||F||^(1 - lam)
    p = ScalingParams("finite", eta=eta, lam=lam)
    assert sigma_value(p, fn) * fn == pytest.approx(eta * fn ** (1 - lam), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.05, 0.95), st.floats(0.1, 5))
def test_thm2_independent_of_initial_condition(eta1, eta2, l1, l2):
    p = ScalingParams("fixed", eta1=eta1, eta2=eta2, lambda1=l1, lambda2=l2)
    assert float(scaling_bound(p, K, 1e-3)) == float(scaling_bound(p, K, 1e9)) > 0
