"""State-dependent scaling of a vector field and settling-time bounds.

Scaling ``F`` by ``sigma(x) = eta ||F(x)||^-lambda`` turns an exponentially
stable flow into a finite-time stable one; adding ``eta2 ||F(x)||^lambda2``
makes the settling time uniformly bounded.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .field import LyapunovConstants, VectorField

# sigma is set to zero when ||F(x)|| <= ZERO_BAND * (1 + ||x||)
ZERO_BAND = 1e-12

VARIANTS = ("none", "finite", "fixed")


@dataclass(frozen=True)
class ScalingParams:
    variant: str = "none"
    eta: float = 1.0
    lam: float = 0.5
    eta1: float = 10.0
    eta2: float = 1.0
    lambda1: float = 0.5
    lambda2: float = 3.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown scaling variant {self.variant!r}")
        if self.variant == "finite":
            _check_finite(self.eta, self.lam)
        elif self.variant == "fixed":
            _check_fixed(self.eta1, self.eta2, self.lambda1, self.lambda2)

    def sigma(self, fnorm: float) -> float:
        return sigma_value(self, fnorm)

    def apply(self, field: VectorField) -> VectorField:
        if self.variant == "finite":
            return finite_scale(field, self.eta, self.lam)
        if self.variant == "fixed":
            return fixed_scale(field, self.eta1, self.eta2, self.lambda1, self.lambda2)
        return field


def _check_finite(eta, lam):
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")


def _check_fixed(eta1, eta2, lambda1, lambda2):
    if not (eta1 > 0 and eta2 > 0):
        raise ValueError("eta1 and eta2 must be positive")
    if not 0 < lambda1 < 1:
        raise ValueError(f"lambda1 must lie in (0, 1), got {lambda1}")
    if not lambda2 > 0:
        raise ValueError(f"lambda2 must be positive, got {lambda2}")


def sigma_value(params: ScalingParams, fnorm: float) -> float:
    """Scaling factor for a field of norm ``fnorm`` (``fnorm > 0`` assumed)."""
    if params.variant == "none":
        return 1.0
    lg = math.log(fnorm)
    if params.variant == "finite":
        return params.eta * math.exp(-params.lam * lg)
    return params.eta1 * math.exp(-params.lambda1 * lg) + params.eta2 * math.exp(params.lambda2 * lg)


class ScaledField(VectorField):
    """``G(x) = sigma(x) F(x)``; keeps a handle on the base field and params."""

    def __init__(self, base: VectorField, params: ScalingParams):
        def func(x):
            return self.evaluate(x)[0]

        super().__init__(base.dim, func, base.equilibrium, None,
                         f"{base.name}[{params.variant}]")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "params", params)

    def evaluate(self, x):
        """Return ``(G(x), ||F(x)||, sigma(x))``."""
        F = np.asarray(self.base.func(x), dtype=float)
        fnorm = float(np.linalg.norm(F))
        if fnorm <= ZERO_BAND * (1.0 + float(np.linalg.norm(x))):
            return np.zeros_like(F), fnorm, 0.0
        s = sigma_value(self.params, fnorm)
        return s * F, fnorm, s


def finite_scale(F: VectorField, eta=1.0, lam=0.5) -> ScaledField:
    """Finite-time scaling ``eta ||F||^-lam F``."""
    _check_finite(eta, lam)
    return ScaledField(F, ScalingParams("finite", eta=eta, lam=lam))


def fixed_scale(F: VectorField, eta1=10.0, eta2=1.0, lambda1=0.5, lambda2=3.0) -> ScaledField:
    """Fixed-time scaling ``(eta1 ||F||^-lambda1 + eta2 ||F||^lambda2) F``."""
    _check_fixed(eta1, eta2, lambda1, lambda2)
    return ScaledField(F, ScalingParams("fixed", eta1=eta1, eta2=eta2,
                                        lambda1=lambda1, lambda2=lambda2))


@dataclass(frozen=True)
class SettlingBound:
    value: float
    kind: str
    inputs_echo: dict

    def __float__(self):
        return float(self.value)


def thm1_bound(k: LyapunovConstants, eta, lam, x0_norm) -> SettlingBound:
    """Finite-time bound ``2 k2 L^lam ||x0||^lam / (k3 eta lam)``."""
    _check_finite(eta, lam)
    value = 2.0 * k.k2 * k.L ** lam / (k.k3 * eta * lam) * float(x0_norm) ** lam
    return SettlingBound(value, "finite_thm1",
                         dict(asdict(k), eta=eta, lam=lam, x0_norm=float(x0_norm)))


def thm2_bound(k: LyapunovConstants, eta1, eta2, lambda1, lambda2) -> SettlingBound:
    """Uniform fixed-time bound; independent of the initial condition."""
    _check_fixed(eta1, eta2, lambda1, lambda2)
    lead = 2.0 * k.k2 ** (1.0 + k.beta * lambda2 / 2.0) / k.k3
    value = lead * (2.0 * k.L ** lambda1 / (eta1 * lambda1)
                    + 1.0 / (eta2 * k.m ** lambda2 * k.beta * lambda2))
    return SettlingBound(value, "fixed_thm2",
                         dict(asdict(k), eta1=eta1, eta2=eta2,
                              lambda1=lambda1, lambda2=lambda2))


def lemma2_bound(V0, c, alpha) -> SettlingBound:
    """``V0^(1 - alpha) / (c (1 - alpha))`` for ``dV/dt <= -c V^alpha``."""
    if not c > 0:
        raise ValueError("c must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if V0 < 0:
        raise ValueError("V0 must be nonnegative")
    value = V0 ** (1.0 - alpha) / (c * (1.0 - alpha))
    return SettlingBound(value, "lemma2", dict(V0=V0, c=c, alpha=alpha))


def lemma3_bound(c1, alpha1, c2, alpha2) -> SettlingBound:
    """``1/(c1 (1 - alpha1)) + 1/(c2 (alpha2 - 1))``."""
    if not (c1 > 0 and c2 > 0):
        raise ValueError("c1 and c2 must be positive")
    if not 0 < alpha1 < 1:
        raise ValueError("alpha1 must lie in (0, 1)")
    if not alpha2 > 1:
        raise ValueError("alpha2 must exceed 1")
    value = 1.0 / (c1 * (1.0 - alpha1)) + 1.0 / (c2 * (alpha2 - 1.0))
    return SettlingBound(value, "lemma3", dict(c1=c1, alpha1=alpha1, c2=c2, alpha2=alpha2))


def fixed_decay_constants(k: LyapunovConstants, eta1, eta2, lambda1, lambda2):
    """Map field constants to ``(c1, alpha1, c2, alpha2)`` of the decay inequality."""
    alpha1 = 1.0 - lambda1 / 2.0
    alpha2 = 1.0 + k.beta * lambda2 / 2.0
    c1 = k.k3 * eta1 / (k.L ** lambda1 * k.k2 ** alpha1)
    c2 = k.k3 * eta2 * k.m ** lambda2 / k.k2 ** alpha2
    return c1, alpha1, c2, alpha2


def scaling_bound(params: ScalingParams, k: LyapunovConstants,
                  x0_norm: float) -> Optional[SettlingBound]:
    if params.variant == "finite":
        return thm1_bound(k, params.eta, params.lam, x0_norm)
    if params.variant == "fixed":
        return thm2_bound(k, params.eta1, params.eta2, params.lambda1, params.lambda2)
    return None
