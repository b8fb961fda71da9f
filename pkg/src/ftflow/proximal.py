"""Proximal operators and Moreau envelopes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def _check_mu(mu):
    if not np.all(np.asarray(mu) > 0):
        raise ValueError(f"mu must be positive, got {mu}")


@dataclass(frozen=True)
class ProxFunction:
    """A closed convex function ``g`` together with its proximal map.

    ``prox(v, mu)`` returns ``argmin_w g(w) + ||w - v||^2 / (2 mu)`` and
    ``value(w)`` returns ``g(w)`` (``inf`` outside the domain).
    """

    prox: Callable[[np.ndarray, float], np.ndarray]
    value: Callable[[np.ndarray], float]
    name: str = "g"
    dim: int | None = None


def prox_l1(v, mu):
    """Soft threshold ``sign(v) * max(|v| - mu, 0)``; ``|v| == mu`` maps to 0.

    ``mu`` may be an array broadcasting against ``v``.
    """
    _check_mu(mu)
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - mu, 0.0)


def _l1_value(w):
    return float(np.sum(np.abs(w)))


def _zero_prox(v, mu):
    _check_mu(mu)
    return np.array(v, dtype=float)


def _zero_value(w):
    return 0.0


L1 = ProxFunction(prox_l1, _l1_value, "l1")
ZERO = ProxFunction(_zero_prox, _zero_value, "zero")


def moreau_value(g: ProxFunction, v, mu) -> float:
    """Moreau envelope ``g(p) + ||p - v||^2 / (2 mu)`` with ``p = prox(v)``."""
    _check_mu(mu)
    v = np.asarray(v, dtype=float)
    p = g.prox(v, mu)
    return float(g.value(p) + np.dot(p - v, p - v) / (2.0 * mu))


def moreau_grad(g: ProxFunction, v, mu) -> np.ndarray:
    """Gradient of the Moreau envelope, ``(v - prox(v)) / mu``."""
    _check_mu(mu)
    v = np.asarray(v, dtype=float)
    return (v - g.prox(v, mu)) / mu
