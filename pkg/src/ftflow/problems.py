"""Random problem instances: fused lasso and linearly constrained QP."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .flows import CompositeProblem, ConstrainedProblem, full_row_rank
from .proximal import L1

NOISE_VARIANCE = 0.1


@dataclass
class FusedLassoInstance:
    problem: CompositeProblem
    E: np.ndarray
    q: np.ndarray
    x_bar: np.ndarray
    seed: int


def difference_matrix(n: int) -> np.ndarray:
    """``n x n`` bidiagonal matrix: 1 on the diagonal, -1 on the first superdiagonal."""
    return np.eye(n) - np.eye(n, k=1)


def gen_fused_lasso(seed: int = 0, n: int = 100, block_len: int = 10,
                    mu: float = 1.0) -> FusedLassoInstance:
    """``minimize ||E x - q||^2 / 2 + ||T x||_1`` with a piecewise-constant truth."""
    if n % block_len:
        raise ValueError(f"n={n} is not divisible by block_len={block_len}")
    rng = np.random.default_rng(seed)
    E = rng.standard_normal((n, n))
    x_bar = np.repeat(rng.integers(1, 11, size=n // block_len), block_len).astype(float)
    w = rng.normal(0.0, np.sqrt(NOISE_VARIANCE), size=n)
    q = E @ x_bar + w
    problem = CompositeProblem.quadratic(E.T @ E, -E.T @ q, L1, difference_matrix(n),
                                         mu=mu, const=0.5 * float(q @ q))
    return FusedLassoInstance(problem, E, q, x_bar, seed)


def gen_qp(seed: int = 0, d: int | None = None, n: int = 20, mu: float = 1.0) -> ConstrainedProblem:
    """``minimize x'Qx + q'x`` s.t. ``E x = 0``, ``F x <= 0`` with ``Q = R'R``.

    Without ``d`` the instance has 3 equality and 5 inequality rows so the
    stacked constraint matrix has full row rank; with ``d`` both ``E`` and
    ``F`` have ``d`` rows, which is rank deficient once ``2 d > n``.
    """
    if n < 1 or (d is not None and d < 1):
        raise ValueError("d and n must be positive")
    d_eq, d_ineq = (3, 5) if d is None else (d, d)
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, n))
    E = rng.standard_normal((d_eq, n))
    F = rng.standard_normal((d_ineq, n))
    q = rng.standard_normal(n)
    if not full_row_rank(np.vstack((F, E))):
        warnings.warn(f"stacked constraint matrix ({d_eq + d_ineq}x{n}) is not full row rank; "
                      "the fixed-time guarantee does not apply", RuntimeWarning, stacklevel=2)
    Q = R.T @ R
    return ConstrainedProblem.quadratic(2.0 * Q, q, F, np.zeros(d_ineq), E, np.zeros(d_eq), mu=mu)
