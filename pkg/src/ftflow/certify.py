"""Empirical certificates: exponential rates, Lipschitz and growth constants,
and Lyapunov decay inequalities checked along computed trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .field import VectorField


@dataclass(frozen=True)
class StabilityEstimate:
    M_hat: float
    rho_hat: float
    r2: float

    @property
    def accepted(self) -> bool:
        return self.r2 >= 0.99 and self.rho_hat > 0


@dataclass(frozen=True)
class GrowthEstimate:
    m_hat: float
    beta_hat: float
    sample_count: int


@dataclass(frozen=True)
class DecayReport:
    checked: int
    violations: int
    worst_margin: float

    @property
    def fraction(self) -> float:
        return self.violations / self.checked if self.checked else 0.0


def _times_states(traj):
    if hasattr(traj, "times"):
        return np.asarray(traj.times, dtype=float), np.asarray(traj.states, dtype=float)
    t, z = traj
    z = np.asarray(z, dtype=float)
    return np.asarray(t, dtype=float), z.reshape(len(z), -1)


def fit_exponential_rate(traj, target, tail: float = 1.0, min_error: float = 1e-12
                         ) -> StabilityEstimate:
    """Least-squares fit of ``log ||z(t) - target||`` against ``t``.

    ``traj`` is a :class:`~ftflow.integrate.Trajectory` or a ``(times, states)``
    pair. Only samples with error above ``min_error`` are used, and of those
    only the last ``tail`` fraction of the time span. ``M_hat`` is the fitted
    intercept relative to the initial error.
    """
    if not 0.0 < tail <= 1.0:
        raise ValueError("tail must lie in (0, 1]")
    t, z = _times_states(traj)
    err = np.linalg.norm(z - np.asarray(target, dtype=float).reshape(1, -1), axis=1)
    keep = err > min_error
    if np.count_nonzero(keep) < 10:
        raise ValueError("fewer than 10 samples above the error floor; trajectory already settled")
    t_k, e_k = t[keep], err[keep]
    t_start = t_k[-1] - tail * (t_k[-1] - t_k[0])
    win = t_k >= t_start
    if np.count_nonzero(win) < 10:
        raise ValueError("fewer than 10 samples in the fit window")
    tw, lw = t_k[win], np.log(e_k[win])
    slope, intercept = np.polyfit(tw, lw, 1)
    resid = lw - (slope * tw + intercept)
    ss_tot = float(np.sum((lw - lw.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
    rho = -float(slope)
    if not rho > 0:
        raise ValueError(f"error does not decay on the fit window (slope {slope:.3e})")
    M = float(np.exp(intercept)) / err[0] if err[0] > 0 else float("inf")
    return StabilityEstimate(M, rho, max(0.0, min(1.0, r2)))


def ball_sampler(center, radius: float, seed: int = 0, decades: float = 8.0):
    """Sampler of points ``center + r u`` with ``u`` uniform on the sphere and
    ``r`` log-uniform on ``[radius 10^-decades, radius]``.

    ``sampler(k)`` returns a ``(k, dim)`` array; the first ``k`` rows are the
    same for every call with at least ``k`` points, so samples are nested.
    """
    center = np.asarray(center, dtype=float).ravel()
    dim = center.size
    if not radius > 0:
        raise ValueError("radius must be positive")
    lo = np.log(radius) - decades * np.log(10.0)
    hi = np.log(radius)

    def sample(k):
        g = np.random.default_rng(seed).standard_normal((int(k), dim + 1))
        u = g[:, :dim]
        norms = np.linalg.norm(u, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        r = np.exp(lo + (hi - lo) * ndtr(g[:, dim]))
        return center + (u / norms) * r[:, None]

    return sample


def estimate_lipschitz(field: VectorField, sampler, pair_count: int) -> float:
    """Largest ``||F(u) - F(v)|| / ||u - v||`` over sampled pairs.

    A lower bound on the Lipschitz modulus.
    """
    if pair_count < 1:
        raise ValueError("pair_count must be at least 1")
    pts = sampler(2 * pair_count)
    vals = np.array([field(p) for p in pts])
    du = np.linalg.norm(pts[0::2] - pts[1::2], axis=1)
    dF = np.linalg.norm(vals[0::2] - vals[1::2], axis=1)
    ok = du > 0
    return float(np.max(dF[ok] / du[ok], initial=0.0))


def estimate_growth(field: VectorField, equilibrium, sampler, sample_count: int) -> GrowthEstimate:
    """Lower envelope ``||F(z)|| >= m ||z - z*||^beta`` on sampled points.

    ``beta`` is the log-log regression slope; ``m`` the smallest ratio given
    that ``beta``, so the envelope holds on every sample.
    """
    if sample_count < 10:
        raise ValueError("sample_count must be at least 10")
    z_star = np.asarray(equilibrium, dtype=float).ravel()
    pts = sampler(sample_count)
    dist = np.linalg.norm(pts - z_star, axis=1)
    keep = dist > 0
    if not np.any(keep):
        raise ValueError("every sample coincides with the equilibrium")
    fn = np.array([np.linalg.norm(field(p)) for p in pts[keep]])
    dist = dist[keep]
    pos = fn > 0
    if np.count_nonzero(pos) < 2:
        raise ValueError("field vanishes on the sample set")
    beta = float(np.polyfit(np.log(dist[pos]), np.log(fn[pos]), 1)[0])
    if not beta > 0:
        raise ValueError(f"non-positive growth exponent {beta:.3e}")
    m = float(np.min(fn / dist ** beta))
    return GrowthEstimate(m, beta, int(dist.size))


def check_decay_inequality(traj, V_values, c1, alpha1, c2, alpha2, slack=1e-3) -> DecayReport:
    """Check ``dV/dt <= -c1 V^a1 - c2 V^a2`` at interior samples.

    ``dV/dt`` is the second-order centred difference on the trajectory's own
    time grid. A point fails when the inequality is violated by more than
    ``slack (1 + |dV/dt|)``; ``worst_margin`` is the largest such excess
    (negative when every point passes).
    """
    t = np.asarray(traj.times if hasattr(traj, "times") else traj, dtype=float)
    V = np.asarray(V_values, dtype=float)
    if V.shape != t.shape:
        raise ValueError("V_values must align with the trajectory times")
    if t.size < 3:
        raise ValueError("need at least 3 samples")
    Vdot = np.gradient(V, t)[1:-1]
    Vi = np.maximum(V[1:-1], 0.0)
    rhs = -c1 * Vi ** alpha1 - c2 * Vi ** alpha2
    excess = Vdot - rhs - slack * (1.0 + np.abs(Vdot))
    return DecayReport(int(excess.size), int(np.count_nonzero(excess > 0)),
                       float(np.max(excess)))
