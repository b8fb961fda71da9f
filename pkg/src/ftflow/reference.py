"""High-accuracy baseline solvers, independent of the flow machinery.

Composite problems are solved by ADMM (with a Chambolle-Pock solver kept as a
second, unrelated method for cross-checks); linearly constrained quadratic
programs by a primal-dual interior-point method followed by an active-set
polish of the KKT system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .flows import CompositeProblem, ConstrainedProblem
from .proximal import moreau_grad

DEFAULT_TOL = 1e-9


class ConvergenceError(RuntimeError):
    """Iteration cap reached; carries the best iterate and its residual."""

    def __init__(self, message, best, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.best = best
        self.residual = residual


class InfeasibleError(RuntimeError):
    pass


@dataclass
class KKTResult:
    x_star: np.ndarray
    ineq_multipliers: np.ndarray
    eq_multipliers: np.ndarray
    residual: float

    @property
    def z_star(self):
        """Equilibrium of the generalized Lagrangian flow, ``(x, y, nu)``."""
        return np.concatenate((self.x_star, self.ineq_multipliers, self.eq_multipliers))


def _require_quadratic(problem):
    if problem.hessian is None:
        raise ValueError("reference solvers need a quadratic smooth term (hessian/linear)")
    return problem.hessian, problem.linear


def composite_residual(problem: CompositeProblem, x, y) -> float:
    """Optimality residual of ``0 in grad f(x) + T' dg(Tx)`` with certificate ``y``.

    ``max(||grad f(x) + T'y||_inf, ||Tx - prox_g(Tx + y)||_inf)``; zero iff
    ``x`` is optimal and ``y`` is a subgradient of ``g`` at ``Tx``.
    """
    T, g = problem.T, problem.g
    Tx = T @ x
    stat = problem.f_grad(x) + T.T @ y
    fix = Tx - g.prox(Tx + y, 1.0)
    return float(max(np.max(np.abs(stat), initial=0.0), np.max(np.abs(fix), initial=0.0)))


def solve_fused_lasso(problem: CompositeProblem, tol=DEFAULT_TOL, rho=1.0,
                      max_iter=200_000, return_dual=False):
    """Minimise ``f(x) + g(Tx)`` by ADMM on the split ``u = Tx``.

    Returns ``x*`` (and the subgradient certificate ``y*`` when
    ``return_dual``) once :func:`composite_residual` is below ``tol``.
    """
    H, h = _require_quadratic(problem)
    T, g = problem.T, problem.g
    d, n = T.shape
    cho = linalg.cho_factor(H + rho * T.T @ T)
    x = np.zeros(n)
    u = np.zeros(d)
    w = np.zeros(d)
    best = (np.inf, x, w)
    for it in range(max_iter):
        x = linalg.cho_solve(cho, -h + rho * T.T @ (u - w))
        Tx = T @ x
        u = g.prox(Tx + w, 1.0 / rho)
        w = w + Tx - u
        if it % 10 == 0:
            res = composite_residual(problem, x, rho * w)
            if res < best[0]:
                best = (res, x.copy(), w.copy())
            if res <= tol:
                break
    else:
        raise ConvergenceError("ADMM did not converge", best[1], best[0])
    return (x, rho * w) if return_dual else x


def solve_composite_pdhg(problem: CompositeProblem, tol=DEFAULT_TOL, max_iter=2_000_000,
                         return_dual=False):
    """Chambolle-Pock primal-dual splitting; used as an independent check on ADMM."""
    H, h = _require_quadratic(problem)
    T, g = problem.T, problem.g
    d, n = T.shape
    Tnorm = np.linalg.norm(T, 2)
    tau = sigma = 0.99 / Tnorm
    cho = linalg.cho_factor(np.eye(n) + tau * H)
    x = np.zeros(n)
    xbar = x.copy()
    y = np.zeros(d)
    best = (np.inf, x, y)
    for it in range(max_iter):
        v = y + sigma * (T @ xbar)
        # Moreau: prox of sigma g* via prox of g / sigma
        y = v - sigma * g.prox(v / sigma, 1.0 / sigma)
        x_new = linalg.cho_solve(cho, x - tau * (T.T @ y) - tau * h)
        xbar = 2.0 * x_new - x
        x = x_new
        if it % 50 == 0:
            res = composite_residual(problem, x, y)
            if res < best[0]:
                best = (res, x.copy(), y.copy())
            if res <= tol:
                break
    else:
        raise ConvergenceError("Chambolle-Pock did not converge", best[1], best[0])
    return (x, y) if return_dual else x


def pal_saddle_point(problem: CompositeProblem, x_star, iters=50) -> np.ndarray:
    """Saddle point ``(x*, y*)`` of the proximal augmented Lagrangian.

    ``y*`` is the least-squares solution of ``T'y = -grad f(x*)`` refined by
    the fixed-point map ``y <- grad M(T x* + mu y)``.
    """
    T, mu = problem.T, problem.mu
    x_star = np.asarray(x_star, dtype=float)
    y = np.linalg.lstsq(T.T, -problem.f_grad(x_star), rcond=None)[0]
    Tx = T @ x_star
    for _ in range(iters):
        y_next = moreau_grad(problem.g, Tx + mu * y, mu)
        if np.array_equal(y_next, y):
            break
        y = y_next
    return np.concatenate((x_star, y))


def kkt_residual(problem: ConstrainedProblem, x, y_ineq=None, nu_eq=None) -> float:
    """Largest violation among stationarity, feasibility, dual sign and complementarity."""
    x = np.asarray(x, dtype=float)
    A, b, C, d = problem.A, problem.b, problem.C, problem.d_eq
    y = np.zeros(A.shape[0]) if y_ineq is None else np.asarray(y_ineq, dtype=float)
    nu = np.zeros(C.shape[0]) if nu_eq is None else np.asarray(nu_eq, dtype=float)
    r = A @ x - b
    parts = [
        np.abs(problem.f_grad(x) + A.T @ y + C.T @ nu),
        np.maximum(r, 0.0),
        np.abs(C @ x - d),
        np.maximum(-y, 0.0),
        np.abs(y * r),
    ]
    return float(max(np.max(p, initial=0.0) for p in parts))


def solve_qp(problem: ConstrainedProblem, tol=DEFAULT_TOL, max_iter=200) -> KKTResult:
    """KKT point of a strictly convex QP.

    Mehrotra predictor-corrector interior point, then the active set read off
    the interior-point iterate is solved exactly. Raises
    :class:`InfeasibleError` when the primal residual cannot be driven down.
    """
    P, c = _require_quadratic(problem)
    A, b, C, d = problem.A, problem.b, problem.C, problem.d_eq
    n, p, q = problem.n, A.shape[0], C.shape[0]
    if p == 0:
        x, nu = _solve_eq_qp(P, c, C, d)
        res = KKTResult(x, np.zeros(0), nu, kkt_residual(problem, x, None, nu))
        return _checked(res, tol)

    x = np.zeros(n)
    s = np.maximum(b - A @ x, 1.0)
    y = np.ones(p)
    nu = np.zeros(q)
    best = None
    for _ in range(max_iter):
        r_d = P @ x + c + A.T @ y + C.T @ nu
        r_p = A @ x + s - b
        r_e = C @ x - d
        gap = float(s @ y) / p
        if max(np.max(np.abs(r_d)), np.max(np.abs(r_p)), np.max(np.abs(r_e), initial=0.0),
               gap) < 1e-13 * (1.0 + np.max(np.abs(c))):
            break
        Dw = y / s
        K = np.zeros((n + q, n + q))
        K[:n, :n] = P + A.T @ (Dw[:, None] * A)
        K[:n, n:] = C.T
        K[n:, :n] = C

        def newton(r_c):
            # r_c is the target for S y; eliminate ds, dy. Overflow on infeasible
            # problems is caught by the finiteness check after the step.
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                rhs_x = -r_d - A.T @ ((r_c - y * r_p) / s)
                sol = np.linalg.solve(K, np.concatenate((rhs_x, -r_e)))
                dx, dnu = sol[:n], sol[n:]
                ds = -r_p - A @ dx
                dy = (r_c - y * ds) / s
            return dx, ds, dy, dnu

        dx, ds, dy, dnu = newton(-s * y)
        a_p, a_d = _step(s, ds), _step(y, dy)
        mu_aff = float((s + a_p * ds) @ (y + a_d * dy)) / p
        sig = (mu_aff / max(gap, 1e-300)) ** 3
        dx, ds, dy, dnu = newton(-s * y - ds * dy + sig * gap)
        a_p, a_d = 0.99 * _step(s, ds), 0.99 * _step(y, dy)
        a = min(a_p, a_d)
        step = (x + a * dx, s + a * ds, y + a * dy, nu + a * dnu)
        if not all(np.all(np.isfinite(v)) for v in step):
            break
        x, s, y, nu = step
        best = (x, y, nu)
    x, y, nu = best if best is not None else (x, y, nu)
    primal_viol = max(np.max(np.maximum(A @ x - b, 0.0)), np.max(np.abs(C @ x - d), initial=0.0))
    if not primal_viol <= 1e-6 * (1.0 + np.max(np.abs(b), initial=0.0)):
        raise InfeasibleError(f"primal infeasibility {primal_viol:.3e} after interior point")
    result = KKTResult(x, np.maximum(y, 0.0), nu, kkt_residual(problem, x, np.maximum(y, 0.0), nu))
    polished = _polish(problem, P, c, x, y, s)
    if polished is not None and polished.residual <= result.residual:
        result = polished
    return _checked(result, tol)


def _step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _solve_eq_qp(P, c, C, d):
    n, q = P.shape[0], C.shape[0]
    if q == 0:
        return linalg.solve(P, -c, assume_a="pos"), np.zeros(0)
    K = np.block([[P, C.T], [C, np.zeros((q, q))]])
    sol = linalg.solve(K, np.concatenate((-c, d)))
    return sol[:n], sol[n:]


def _polish(problem, P, c, x, y, s):
    A, b, C, d = problem.A, problem.b, problem.C, problem.d_eq
    n, q = P.shape[0], C.shape[0]
    active = np.nonzero(y > s)[0]
    Aa = A[active]
    M = np.vstack((Aa, C))
    k = M.shape[0]
    K = np.block([[P, M.T], [M, np.zeros((k, k))]])
    try:
        sol = linalg.solve(K, np.concatenate((-c, b[active], d)))
    except linalg.LinAlgError:
        return None
    xp = sol[:n]
    yp = np.zeros(A.shape[0])
    yp[active] = sol[n:n + active.size]
    nup = sol[n + active.size:]
    if np.any(yp < 0.0) or np.any(A @ xp - b > 1e-12 * (1.0 + np.abs(b))):
        return None
    return KKTResult(xp, yp, nup, kkt_residual(problem, xp, yp, nup))


def _checked(result: KKTResult, tol):
    if not result.residual <= tol:
        raise ConvergenceError("QP solve did not reach the tolerance", result, result.residual)
    return result
