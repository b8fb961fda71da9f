"""Settling-time sweeps over initial-condition magnitude with bound overlays."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .certify import (ball_sampler, estimate_growth, estimate_lipschitz,
                      fit_exponential_rate)
from .field import LyapunovConstants, VectorField, linear_field
from .flows import genlag_field, pal_field
from .integrate import IntegrateOptions, IntegrationError, integrate, settling_time
from .problems import gen_fused_lasso, gen_qp
from .reference import pal_saddle_point, solve_fused_lasso, solve_qp
from .scaling import ScalingParams, scaling_bound

PROBLEMS = ("fused_lasso", "qp", "scalar")
DEFAULT_MAGNITUDES = (1.0, 1e1, 1e2, 1e3, 1e4)
FIG3_SCALING = ScalingParams("fixed", eta1=10.0, eta2=1.0, lambda1=0.5, lambda2=3.0)
CERT_SAMPLES = 2000


@dataclass
class ExperimentConfig:
    problem: str
    seed: int = 0
    mu: float = 1.0
    scaling: ScalingParams = FIG3_SCALING
    magnitudes: tuple = DEFAULT_MAGNITUDES
    settle_delta: float = 1e-4
    integrator: IntegrateOptions = field(default_factory=lambda: IntegrateOptions(t_max=200.0))
    n: Optional[int] = None
    d: Optional[int] = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        self.magnitudes = tuple(float(s) for s in self.magnitudes)
        if not self.magnitudes or any(not s > 0 for s in self.magnitudes):
            raise ValueError("magnitudes must be a nonempty list of positive numbers")
        if not self.settle_delta > 0:
            raise ValueError("settle_delta must be positive")


@dataclass
class ProblemSetup:
    name: str
    field: VectorField
    z_star: np.ndarray
    dual_slice: Optional[slice] = None
    constants: Optional[LyapunovConstants] = None
    instance: object = None

    @property
    def scale(self) -> float:
        return max(1.0, float(np.linalg.norm(self.z_star)))

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.z_star).tobytes()).hexdigest()

    def err_rel(self, states) -> np.ndarray:
        return np.linalg.norm(np.atleast_2d(states) - self.z_star, axis=1) / self.scale


@dataclass
class SweepRow:
    magnitude: float
    settling_time: Optional[float]
    thm_bound: Optional[float]
    final_err_rel: float
    terminated_by: str
    message: str = ""

    @property
    def flagged(self) -> bool:
        return self.terminated_by == "error"


@dataclass
class SweepResult:
    rows: list
    metadata: dict


def build_setup(config: ExperimentConfig) -> ProblemSetup:
    """Instance, unscaled field and reference equilibrium for ``config``."""
    if config.problem == "scalar":
        dim = config.n or 1
        F = linear_field(-np.eye(dim), name="scalar")
        # V = x^2: k1 = k2 = 1, dV/dt = -2 V, L = m = beta = 1
        k = LyapunovConstants(k1=1.0, k2=1.0, k3=2.0, L=1.0, m=1.0, beta=1.0)
        return ProblemSetup("scalar", F, np.zeros(dim), None, k)
    if config.problem == "fused_lasso":
        kw = {} if config.n is None else {"n": config.n}
        inst = gen_fused_lasso(config.seed, mu=config.mu, **kw)
        x_star = solve_fused_lasso(inst.problem)
        z_star = pal_saddle_point(inst.problem, x_star)
        F = pal_field(inst.problem, z_star)
        return ProblemSetup("fused_lasso", F, z_star, None, None, inst)
    kw = {} if config.n is None else {"n": config.n}
    prob = gen_qp(config.seed, d=config.d, mu=config.mu, **kw)
    kkt = solve_qp(prob)
    F = genlag_field(prob, kkt.z_star)
    return ProblemSetup("qp", F, kkt.z_star, slice(prob.n, prob.n + prob.n_ineq), None, prob)


def sweep_direction(config: ExperimentConfig, setup: ProblemSetup) -> np.ndarray:
    """Unit perturbation direction, fixed across magnitudes.

    Inequality-dual components are made nonnegative so every initial
    condition keeps the multipliers in the nonnegative orthant.
    """
    rng = np.random.default_rng([int(config.seed), 1])
    u = rng.standard_normal(setup.z_star.size)
    if setup.dual_slice is not None:
        u[setup.dual_slice] = np.abs(u[setup.dual_slice])
    return u / np.linalg.norm(u)


def certify_constants(config: ExperimentConfig, setup: ProblemSetup, u,
                      samples: int = CERT_SAMPLES):
    """Estimated ``(k2, k3, L, m, beta)`` for ``V = ||z - z*||^2``.

    ``k3 = 2 rho`` with ``rho`` fitted on the tail of an unscaled run from the
    smallest magnitude; ``L``, ``m``, ``beta`` are sampled on a ball of radius
    ten times the largest magnitude.
    """
    z_star = setup.z_star
    s0, s_max = min(config.magnitudes), max(config.magnitudes)
    opts = replace(config.integrator, t_max=max(config.integrator.t_max, 5000.0),
                   settle_target=z_star, settle_delta=1e-2 * config.settle_delta,
                   record_stride="all")
    traj = integrate(setup.field, z_star + s0 * u, opts)
    rate = fit_exponential_rate(traj, z_star, tail=0.5)
    sampler = ball_sampler(z_star, 10.0 * s_max, seed=int(config.seed))
    L = estimate_lipschitz(setup.field, sampler, samples // 2)
    growth = estimate_growth(setup.field, z_star, sampler, samples)
    k = LyapunovConstants(k1=1.0, k2=1.0, k3=2.0 * rate.rho_hat, L=L,
                          m=growth.m_hat, beta=growth.beta_hat)
    return k, rate, growth


def run_row(setup: ProblemSetup, field: VectorField, z0, config: ExperimentConfig,
            bound: Optional[float], magnitude: float) -> SweepRow:
    opts = replace(config.integrator, settle_target=setup.z_star,
                   settle_delta=config.settle_delta)
    try:
        traj = integrate(field, z0, opts)
    except IntegrationError as exc:
        return SweepRow(magnitude, None, bound, float("nan"), "error", str(exc))
    t_settle = settling_time(traj, setup.z_star, config.settle_delta)
    final = float(setup.err_rel(traj.final_state)[0])
    return SweepRow(magnitude, t_settle, bound, final, traj.terminated_by, traj.message)


def run_sweep(config: ExperimentConfig, setup: Optional[ProblemSetup] = None,
              scaling: Optional[ScalingParams] = None) -> SweepResult:
    """Settling time versus initial magnitude for one scaling choice.

    ``z0 = z* + s u`` with a seeded unit direction ``u``. For non-scalar
    problems the bound uses certified estimates (see :func:`certify_constants`).
    """
    setup = setup or build_setup(config)
    params = scaling or config.scaling
    u = sweep_direction(config, setup)
    meta = {"problem": config.problem, "seed": config.seed, "mu": config.mu,
            "scaling": params.variant, "settle_delta": config.settle_delta,
            "reference_digest": setup.digest(), "dim": setup.z_star.size}
    k = setup.constants
    if k is None and params.variant != "none":
        k, rate, growth = certify_constants(config, setup, u)
        meta.update(rho_hat=rate.rho_hat, rate_r2=rate.r2, L_hat=k.L,
                    m_hat=growth.m_hat, beta_hat=growth.beta_hat)
    field = params.apply(setup.field)
    rows = []
    for s in config.magnitudes:
        b = scaling_bound(params, k, s) if k is not None else None
        rows.append(run_row(setup, field, setup.z_star + s * u, config,
                            None if b is None else float(b), s))
    return SweepResult(rows, meta)


def settling_ratio(rows) -> Optional[float]:
    """max/min settling time, or ``None`` if any row did not settle."""
    ts = [r.settling_time for r in rows]
    if any(t is None or not t > 0 for t in ts):
        return None
    return max(ts) / min(ts)


__all__ = ["ExperimentConfig", "ProblemSetup", "SweepResult", "SweepRow", "build_setup",
           "certify_constants", "run_sweep", "settling_ratio", "sweep_direction"]
