import warnings

import numpy as np
import pytest

from ftflow.flows import full_row_rank
from ftflow.problems import difference_matrix, gen_fused_lasso, gen_qp


def test_difference_matrix_small():
    np.testing.assert_array_equal(difference_matrix(3),
                                  [[1, -1, 0], [0, 1, -1], [0, 0, 1]])


def test_fused_lasso_structure():
    inst = gen_fused_lasso(seed=0, n=40)
    blocks = inst.x_bar.reshape(4, 10)
    assert np.all(blocks == blocks[:, :1])
    assert np.all((inst.x_bar >= 1) & (inst.x_bar <= 10))
    np.testing.assert_allclose(inst.problem.hessian, inst.E.T @ inst.E)
    assert inst.problem.T.shape == (40, 40)
    with pytest.raises(ValueError):
        gen_fused_lasso(n=45)


def test_fused_lasso_deterministic():
    a, b = gen_fused_lasso(seed=5, n=20), gen_fused_lasso(seed=5, n=20)
    np.testing.assert_array_equal(a.q, b.q)
    assert not np.array_equal(a.q, gen_fused_lasso(seed=6, n=20).q)


def test_fused_lasso_noise_level():
    inst = gen_fused_lasso(seed=0, n=1000, block_len=10)
    resid = inst.q - inst.E @ inst.x_bar
    assert np.var(resid) == pytest.approx(0.1, rel=0.15)


def test_qp_default_shape_and_rank():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        prob = gen_qp(seed=0)
    assert (prob.n, prob.n_ineq, prob.n_eq) == (20, 5, 3)
    assert full_row_rank(np.vstack((prob.A, prob.C)))
    assert np.all(np.linalg.eigvalsh(prob.hessian) > 0)
    assert np.all(prob.b == 0) and np.all(prob.d_eq == 0)


def test_qp_rank_deficient_warns():
    with pytest.warns(RuntimeWarning, match="full row rank"):
        prob = gen_qp(seed=0, d=12, n=20)
    assert (prob.n_ineq, prob.n_eq) == (12, 12)


def test_qp_deterministic():
    a, b = gen_qp(3), gen_qp(3)
    np.testing.assert_array_equal(a.A, b.A)
    np.testing.assert_array_equal(a.linear, b.linear)
    with pytest.raises(ValueError):
        gen_qp(0, d=0)
