"""Gradient and primal-dual flows for composite and linearly constrained problems.

State layouts: the proximal augmented Lagrangian flow acts on ``z = (x, y)``
with ``x`` in R^n and ``y`` in R^d; the generalized Lagrangian flow acts on
``z = (x, y, nu)`` with inequality multipliers ``y`` and equality multipliers
``nu``.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .field import KernelSpec, VectorField
from .proximal import L1, ProxFunction, moreau_grad, moreau_value

# Test hook: names of deliberately broken behaviours (see ``inject_fault``).
_FAULTS: set = set()
KNOWN_FAULTS = ("pal_dual_sign",)


@contextlib.contextmanager
def inject_fault(name: str):
    """Temporarily break a field constructor so verification must fail.

    Only ``"pal_dual_sign"`` is recognised: it flips the sign of the dual
    component of :func:`pal_field`.
    """
    if name not in KNOWN_FAULTS:
        raise ValueError(f"unknown fault {name!r}; known: {KNOWN_FAULTS}")
    _FAULTS.add(name)
    try:
        yield
    finally:
        _FAULTS.discard(name)


def full_row_rank(M, rtol=1e-10) -> bool:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return True
    if M.shape[0] > M.shape[1]:
        return False
    s = np.linalg.svd(M, compute_uv=False)
    return bool(s[-1] > rtol * s[0])


def _quadratic(H, h, const=0.0):
    H = np.ascontiguousarray(H, dtype=float)
    h = np.ascontiguousarray(h, dtype=float).reshape(-1)

    def value(x):
        return float(0.5 * x @ (H @ x) + h @ x + const)

    def grad(x):
        return H @ x + h

    return H, h, value, grad


@dataclass(frozen=True, eq=False)
class CompositeProblem:
    """``minimize f(x) + g(T x)`` with penalty parameter ``mu``.

    ``hessian``/``linear`` are set when ``f = x'Hx/2 + h'x + const``; they are
    what lets the compiled backend evaluate the flow natively.
    """

    f_value: Callable[[np.ndarray], float]
    f_grad: Callable[[np.ndarray], np.ndarray]
    g: ProxFunction
    T: np.ndarray
    mu: float = 1.0
    hessian: Optional[np.ndarray] = None
    linear: Optional[np.ndarray] = None

    def __post_init__(self):
        T = np.ascontiguousarray(np.atleast_2d(self.T), dtype=float)
        object.__setattr__(self, "T", T)
        if not self.mu > 0:
            raise ValueError("mu must be positive")

    @classmethod
    def quadratic(cls, H, h, g, T, mu=1.0, const=0.0):
        H, h, value, grad = _quadratic(H, h, const)
        return cls(value, grad, g, T, mu, H, h)

    @property
    def n(self):
        return self.T.shape[1]

    @property
    def d(self):
        return self.T.shape[0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return self.f_value(x) + self.g.value(self.T @ x)


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    """``minimize f(x)`` subject to ``A x <= b`` and ``C x = d_eq``."""

    f_value: Callable[[np.ndarray], float]
    f_grad: Callable[[np.ndarray], np.ndarray]
    A: np.ndarray
    b: np.ndarray
    C: Optional[np.ndarray] = None
    d_eq: Optional[np.ndarray] = None
    mu: float = 1.0
    hessian: Optional[np.ndarray] = None
    linear: Optional[np.ndarray] = None
    n: int = dc_field(init=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1) if A.size else A.reshape(0, 0)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if b.size != A.shape[0]:
            raise ValueError(f"b has length {b.size}, A has {A.shape[0]} rows")
        if self.hessian is not None:
            n = np.asarray(self.hessian).shape[0]
        elif A.shape[0]:
            n = A.shape[1]
        else:
            n = np.atleast_2d(self.C).shape[1]
        if A.shape[0] == 0:
            A = np.zeros((0, n))
        C = np.zeros((0, n)) if self.C is None else np.atleast_2d(np.asarray(self.C, dtype=float))
        if C.size == 0:
            C = np.zeros((0, n))
        d_eq = np.zeros(C.shape[0]) if self.d_eq is None else np.asarray(self.d_eq, dtype=float).reshape(-1)
        if d_eq.size != C.shape[0]:
            raise ValueError(f"d_eq has length {d_eq.size}, C has {C.shape[0]} rows")
        if A.shape[1] != n or C.shape[1] != n:
            raise ValueError("constraint matrices disagree on the number of columns")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        object.__setattr__(self, "A", np.ascontiguousarray(A))
        object.__setattr__(self, "b", np.ascontiguousarray(b))
        object.__setattr__(self, "C", np.ascontiguousarray(C))
        object.__setattr__(self, "d_eq", np.ascontiguousarray(d_eq))
        object.__setattr__(self, "n", n)

    @classmethod
    def quadratic(cls, H, h, A, b, C=None, d_eq=None, mu=1.0, const=0.0):
        H, h, value, grad = _quadratic(H, h, const)
        return cls(value, grad, A, b, C, d_eq, mu, H, h)

    @property
    def n_ineq(self):
        return self.A.shape[0]

    @property
    def n_eq(self):
        return self.C.shape[0]

    @property
    def dim(self):
        return self.n + self.n_ineq + self.n_eq

    def split(self, z):
        n, p = self.n, self.n_ineq
        return z[:n], z[n:n + p], z[n + p:]


def gradient_flow(f_grad, dim, equilibrium=None, hessian=None, linear=None) -> VectorField:
    """``F(x) = -grad f(x)``; pass ``hessian``/``linear`` for a quadratic ``f``."""
    kernel = None
    if hessian is not None:
        H = np.ascontiguousarray(hessian, dtype=float)
        h = np.zeros(dim) if linear is None else np.ascontiguousarray(linear, dtype=float)
        kernel = KernelSpec("linear", {"M": np.ascontiguousarray(-H), "c": -h})

    def func(x):
        return -np.asarray(f_grad(x), dtype=float)

    return VectorField(dim, func, equilibrium, kernel, "gradient_flow")


def pal_lagrangian(problem: CompositeProblem, x, y) -> float:
    """Proximal augmented Lagrangian ``f(x) + M(Tx + mu y) - mu ||y||^2 / 2``."""
    mu = problem.mu
    v = problem.T @ x + mu * y
    return problem.f_value(x) + moreau_value(problem.g, v, mu) - 0.5 * mu * float(y @ y)


def pal_field(problem: CompositeProblem, equilibrium=None) -> VectorField:
    """Primal-dual gradient flow on the proximal augmented Lagrangian.

    ``x' = -grad f(x) - T' grad M(Tx + mu y)``,
    ``y' = mu (grad M(Tx + mu y) - y)``.
    """
    T, g, mu, grad = problem.T, problem.g, problem.mu, problem.f_grad
    d, n = T.shape
    dual_sign = -1.0 if "pal_dual_sign" in _FAULTS else 1.0

    def func(z):
        x, y = z[:n], z[n:]
        r = moreau_grad(g, T @ x + mu * y, mu)
        return np.concatenate((-grad(x) - T.T @ r, dual_sign * mu * (r - y)))

    kernel = None
    if problem.hessian is not None and g is L1 and dual_sign > 0:
        kernel = KernelSpec("pal_l1", {
            "H": np.ascontiguousarray(problem.hessian),
            "h": np.ascontiguousarray(problem.linear),
            "T": T, "mu": float(mu)})
    return VectorField(n + d, func, equilibrium, kernel, "pal")


def genlag_penalty(v, w, mu):
    """Penalty ``h_mu(v, w)`` of the generalized Lagrangian (vectorised)."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    out = np.where(mu * v + w >= 0, v * w + 0.5 * mu * v * v, -w * w / (2.0 * mu))
    return out if out.ndim else float(out)


def genlag_lagrangian(problem: ConstrainedProblem, z) -> float:
    """``f(x) + sum_i h_mu(a_i'x - b_i, y_i) + nu'(Cx - d)``."""
    x, y, nu = problem.split(np.asarray(z, dtype=float))
    pen = genlag_penalty(problem.A @ x - problem.b, y, problem.mu)
    return float(problem.f_value(x) + np.sum(pen) + nu @ (problem.C @ x - problem.d_eq))


def genlag_field(problem: ConstrainedProblem, equilibrium=None) -> VectorField:
    """Primal-dual gradient flow on the generalized Lagrangian.

    Equality constraints enter as plain Lagrangian terms:
    ``x'`` gains ``-C' nu`` and ``nu' = C x - d``.
    """
    A, b, C, d_eq, mu, grad = (problem.A, problem.b, problem.C, problem.d_eq,
                               problem.mu, problem.f_grad)
    n, p = problem.n, problem.n_ineq

    def func(z):
        x, y, nu = z[:n], z[n:n + p], z[n + p:]
        r = A @ x - b
        dx = -grad(x) - A.T @ np.maximum(mu * r + y, 0.0) - C.T @ nu
        dy = np.maximum(mu * r, -y) / mu
        return np.concatenate((dx, dy, C @ x - d_eq))

    kernel = None
    if problem.hessian is not None:
        kernel = KernelSpec("genlag", {
            "H": np.ascontiguousarray(problem.hessian),
            "h": np.ascontiguousarray(problem.linear),
            "A": A, "b": b, "C": C, "d": d_eq, "mu": float(mu)})
    return VectorField(problem.dim, func, equilibrium, kernel, "genlag")
