import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftflow import _backend
from ftflow.flows import (CompositeProblem, ConstrainedProblem, full_row_rank, genlag_field,
                          genlag_lagrangian, genlag_penalty, gradient_flow, inject_fault,
                          pal_field, pal_lagrangian)
from ftflow.problems import gen_fused_lasso, gen_qp
from ftflow.proximal import L1


def _fd_grad(fun, z, h=1e-6):
    g = np.empty_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (fun(z + e) - fun(z - e)) / (2 * h)
    return g


@pytest.fixture(scope="module")
def small_lasso():
    return gen_fused_lasso(seed=3, n=10, block_len=5).problem


def test_pal_field_is_descent_ascent_of_lagrangian(small_lasso, rng):
    P = small_lasso
    n = P.n
    F = pal_field(P)
    for _ in range(5):
        z = rng.normal(scale=3.0, size=F.dim)
        g = _fd_grad(lambda w: pal_lagrangian(P, w[:n], w[n:]), z)
        np.testing.assert_allclose(F(z), np.concatenate((-g[:n], g[n:])), rtol=1e-5, atol=1e-5)


def test_genlag_field_is_descent_ascent_of_lagrangian(rng):
    P = gen_qp(seed=2)
    n = P.n
    F = genlag_field(P)
    for _ in range(5):
        z = rng.normal(size=F.dim)
        g = _fd_grad(lambda w: genlag_lagrangian(P, w), z)
        np.testing.assert_allclose(F(z), np.concatenate((-g[:n], g[n:])), rtol=1e-5, atol=1e-5)


@pytest.mark.skipif(_backend.core is None, reason="extension not built")
@pytest.mark.parametrize("make", [
    lambda: pal_field(gen_fused_lasso(seed=1, n=20, block_len=10).problem),
    lambda: genlag_field(gen_qp(seed=1)),
    lambda: gradient_flow(lambda x: np.array([1.0, 2.0, 3.0]) * x + 1.0, 3,
                          hessian=np.diag([1.0, 2.0, 3.0]), linear=np.ones(3)),
])
def test_native_kernels_match_python(make, rng):
    F = make()
    native = _backend.core.make_field(F.kernel.kind, F.kernel.data)
    for _ in range(10):
        z = rng.normal(scale=5.0, size=F.dim)
        np.testing.assert_allclose(native(z), F(z), rtol=1e-12, atol=1e-12)


def test_gradient_flow_linear():
    F = gradient_flow(lambda x: 2 * x, 2, hessian=2 * np.eye(2), linear=np.zeros(2))
    np.testing.assert_allclose(F(np.array([1.0, -1.0])), [-2.0, 2.0])


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.01, 10))
def test_penalty_is_continuous_across_branches(v, w, mu):
    # both branches agree on the switching surface mu v + w = 0
    w_s = -mu * v
    left = v * w_s + 0.5 * mu * v * v
    right = -w_s * w_s / (2 * mu)
    assert left == pytest.approx(right, abs=1e-9 * (1 + abs(w_s) ** 2))
    assert np.isfinite(genlag_penalty(v, w, mu))


def test_penalty_rejects_bad_mu():
    with pytest.raises(ValueError):
        genlag_penalty(1.0, 1.0, 0.0)


def test_dual_orthant_is_invariant_on_boundary(rng):
    # y_i = 0 implies dy_i = max(mu r_i, 0) / mu >= 0
    P = gen_qp(seed=0)
    F = genlag_field(P)
    for _ in range(20):
        z = rng.normal(size=F.dim)
        z[P.n:P.n + P.n_ineq] = 0.0
        assert np.all(F(z)[P.n:P.n + P.n_ineq] >= 0.0)


def test_fault_hook_flips_dual_and_drops_kernel(small_lasso, rng):
    z = rng.normal(size=small_lasso.n + small_lasso.d)
    good = pal_field(small_lasso)
    with inject_fault("pal_dual_sign"):
        bad = pal_field(small_lasso)
    assert bad.kernel is None and good.kernel is not None
    n = small_lasso.n
    np.testing.assert_allclose(bad(z)[n:], -good(z)[n:])
    np.testing.assert_allclose(bad(z)[:n], good(z)[:n])
    assert pal_field(small_lasso).kernel is not None


def test_unknown_fault_rejected():
    with pytest.raises(ValueError):
        with inject_fault("nope"):
            pass


def test_composite_problem_shapes():
    P = CompositeProblem.quadratic(np.eye(3), np.zeros(3), L1, np.ones((2, 3)))
    assert (P.n, P.d) == (3, 2)
    assert P.objective(np.zeros(3)) == 0.0


def test_constrained_problem_empty_constraints():
    P = ConstrainedProblem.quadratic(np.eye(2), np.ones(2), np.zeros((0, 2)), np.zeros(0))
    assert (P.n_ineq, P.n_eq, P.dim) == (0, 0, 2)
    x, y, nu = P.split(np.arange(2.0))
    assert y.size == 0 and nu.size == 0


def test_constrained_problem_rejects_mismatch():
    with pytest.raises(ValueError):
        ConstrainedProblem.quadratic(np.eye(2), np.ones(2), np.ones((1, 2)), np.zeros(2))


def test_full_row_rank():
    assert full_row_rank(np.eye(2, 3))
    assert not full_row_rank(np.ones((2, 3)))
    assert not full_row_rank(np.ones((4, 3)))
