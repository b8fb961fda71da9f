import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftflow.proximal import L1, ZERO, moreau_grad, moreau_value, prox_l1

finite = st.floats(-1e3, 1e3, allow_nan=False)
positive = st.floats(1e-3, 1e2)


def test_soft_threshold_values():
    np.testing.assert_array_equal(prox_l1([3.0, -3.0, 0.5, -0.5], 1.0), [2.0, -2.0, 0.0, 0.0])


def test_threshold_boundary_maps_to_zero():
    assert prox_l1(1.0, 1.0) == 0.0
    assert prox_l1(-2.5, 2.5) == 0.0


@pytest.mark.parametrize("mu", [0.0, -1.0])
def test_nonpositive_mu_rejected(mu):
    with pytest.raises(ValueError):
        prox_l1(1.0, mu)
    with pytest.raises(ValueError):
        moreau_grad(L1, np.ones(2), mu)


def test_huber_envelope():
    # Moreau envelope of |.| is the Huber function
    v = np.array([0.3, -2.0])
    expected = 0.3 ** 2 / 2 + (2.0 - 0.5)
    assert moreau_value(L1, v, 1.0) == pytest.approx(expected)
    np.testing.assert_allclose(moreau_grad(L1, v, 1.0), [0.3, -1.0])


def test_zero_function_prox_is_identity():
    v = np.array([1.0, -4.0])
    np.testing.assert_array_equal(ZERO.prox(v, 0.7), v)
    assert moreau_value(ZERO, v, 0.7) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=8), positive)
def test_prox_nonexpansive(pairs, mu):
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    assert np.linalg.norm(prox_l1(a, mu) - prox_l1(b, mu)) <= np.linalg.norm(a - b) + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=8), positive)
def test_moreau_gradient_bounded_for_l1(v, mu):
    v = np.array(v)
    g = moreau_grad(L1, v, mu)
    assert np.all(np.abs(g) <= 1.0 + 1e-12 * (1.0 + np.abs(v) / mu))


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=8), positive)
def test_envelope_below_function(v, mu):
    v = np.array(v)
    assert moreau_value(L1, v, mu) <= L1.value(v) + 1e-9


@settings(max_examples=100, deadline=None)
@given(finite, positive)
def test_prox_optimality(v, mu):
    # 0 in sign(p) + (p - v) / mu
    p = float(prox_l1(v, mu))
    if p != 0.0:
        assert np.sign(p) + (p - v) / mu == pytest.approx(0.0, abs=1e-9 * (1 + abs(v) / mu))
    else:
        assert abs(v) <= mu
