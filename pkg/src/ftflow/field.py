"""Vector fields with a declared equilibrium."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class DimensionError(ValueError):
    """State vector length does not match the field dimension."""


@dataclass(frozen=True)
class KernelSpec:
    """Native description of a field the compiled integrator can evaluate.

    ``kind`` is one of ``"linear"``, ``"pal_l1"`` or ``"genlag"``; ``data``
    holds the contiguous float64 arrays and scalars for that family.
    """

    kind: str
    data: dict


@dataclass(frozen=True, eq=False)
class VectorField:
    """Dynamical generator ``F: R^dim -> R^dim``.

    Parameters
    ----------
    dim : int
        State dimension.
    func : callable
        Maps a float64 array of length ``dim`` to an array of the same length.
    equilibrium : ndarray, optional
        Point ``z*`` with ``F(z*) = 0``. Never computed here.
    kernel : KernelSpec, optional
        Set by the field constructors in :mod:`ftflow.flows` so the compiled
        integrator can bypass Python callbacks.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    equilibrium: Optional[np.ndarray] = None
    kernel: Optional[KernelSpec] = None
    name: str = "field"

    def __post_init__(self):
        if int(self.dim) <= 0:
            raise ValueError("dim must be positive")
        if self.equilibrium is not None:
            eq = np.array(self.equilibrium, dtype=float).reshape(-1)
            if eq.size != self.dim:
                raise DimensionError(
                    f"equilibrium has length {eq.size}, field dim is {self.dim}")
            eq.setflags(write=False)
            object.__setattr__(self, "equilibrium", eq)

    def __call__(self, state) -> np.ndarray:
        return eval_field(self, state)

    def equilibrium_residual(self) -> float:
        """``||F(z*)||``; raises if no equilibrium is declared."""
        if self.equilibrium is None:
            raise ValueError("field has no declared equilibrium")
        return float(np.linalg.norm(self(self.equilibrium)))

    def with_equilibrium(self, z_star) -> "VectorField":
        return VectorField(self.dim, self.func, z_star, self.kernel, self.name)


@dataclass(frozen=True)
class LyapunovConstants:
    """Quadratic Lyapunov sandwich and regularity constants of a field.

    ``k1 ||x||^2 <= V <= k2 ||x||^2``, ``dV/dt <= -k3 ||x||^2``, Lipschitz
    modulus ``L`` and growth ``||F(x)|| >= m ||x||^beta``.
    """

    k1: float = 1.0
    k2: float = 1.0
    k3: float = 1.0
    L: float = 1.0
    m: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for key in ("k1", "k2", "k3", "L", "m", "beta"):
            val = getattr(self, key)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{key} must be positive and finite, got {val}")
        if self.k1 > self.k2:
            raise ValueError("k1 must not exceed k2")


def _as_state(field: VectorField, state) -> np.ndarray:
    z = np.asarray(state, dtype=float).reshape(-1)
    if z.size != field.dim:
        raise DimensionError(f"state has length {z.size}, field dim is {field.dim}")
    return z


def eval_field(field: VectorField, state) -> np.ndarray:
    """Evaluate ``F(state)`` after a dimension check."""
    z = _as_state(field, state)
    out = np.asarray(field.func(z), dtype=float).reshape(-1)
    if out.size != field.dim:
        raise DimensionError(f"field returned length {out.size}, expected {field.dim}")
    return out


def shift_to_origin(field: VectorField) -> VectorField:
    """Return ``G(u) = F(u + z*)`` whose equilibrium is the origin.

    Fields already centred at the origin are returned unchanged.
    """
    if field.equilibrium is None:
        raise ValueError("shift_to_origin requires a declared equilibrium")
    z_star = np.array(field.equilibrium)
    if not np.any(z_star):
        return field
    func = field.func

    def shifted(u):
        return func(u + z_star)

    return VectorField(field.dim, shifted, np.zeros(field.dim), None,
                       field.name + "@origin")


def linear_field(M, c=None, equilibrium=None, name="linear") -> VectorField:
    """Affine field ``F(z) = M z + c``."""
    M = np.ascontiguousarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    n = M.shape[0]
    c = np.zeros(n) if c is None else np.ascontiguousarray(c, dtype=float).reshape(-1)

    def func(z):
        return M @ z + c

    return VectorField(n, func, equilibrium,
                       KernelSpec("linear", {"M": M, "c": c}), name)
