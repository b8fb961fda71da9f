"""Acceptance suite: each criterion runs at its stated tolerance and budget.

Used by ``ftflow verify`` and by the test suite. Every criterion returns a
:class:`CriterionResult`; the report lists measured values but no wall times
so that repeated runs produce identical text.
"""
from __future__ import annotations

import filecmp
import shutil
import time
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate as sp_integrate

from .certify import check_decay_inequality, fit_exponential_rate
from .experiments import (FIG3_SCALING, ExperimentConfig, build_setup, run_sweep,
                          settling_ratio, sweep_direction)
from .field import LyapunovConstants, linear_field
from .integrate import IntegrateOptions, integrate, path_distance, settling_time
from .proximal import L1, moreau_grad, moreau_value, prox_l1
from .reference import kkt_residual
from .scaling import ScalingParams, fixed_decay_constants, thm1_bound, thm2_bound

SCALAR_K = LyapunovConstants(k1=1.0, k2=1.0, k3=2.0, L=1.0, m=1.0, beta=1.0)
SCALAR_BALL = 1e-9
FIXED_X0 = (1e-3, 1.0, 1e3, 1e6)
SWEEP_MAGNITUDES = (1.0, 1e2, 1e4)
DESK_LASSO = dict(problem="fused_lasso", seed=0, n=40)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    budget: float = 0.0


def _scalar():
    return linear_field(-np.eye(1), name="scalar")


def _scalar_settle(field, x0):
    opts = IntegrateOptions(t_max=50.0, settle_target=np.zeros(1), settle_delta=SCALAR_BALL)
    return settling_time(integrate(field, [x0], opts), [0.0], SCALAR_BALL)


def fixed_time_oracle(x0, eta1=1.0, eta2=1.0, lambda1=0.5, lambda2=3.0):
    """Arrival time of ``x' = -(eta1 |x|^-lambda1 + eta2 |x|^lambda2) x`` by quadrature."""
    def f(r):
        return 1.0 / (eta1 * r ** (1.0 - lambda1) + eta2 * r ** (1.0 + lambda2))
    x0 = abs(float(x0))
    total = sp_integrate.quad(f, 0.0, min(x0, 1.0), limit=200)[0]
    if x0 > 1.0:
        # r = e^s spreads the mass near r = 1 over the whole interval
        total += sp_integrate.quad(lambda s: f(np.exp(s)) * np.exp(s), 0.0, np.log(x0),
                                   limit=200)[0]
    return total


def c1_finite_time():
    eta, lam = 1.0, 0.5
    G = ScalingParams("finite", eta=eta, lam=lam).apply(_scalar())
    ok, parts = True, []
    for x0 in (0.1, 1.0, 10.0):
        t = _scalar_settle(G, x0)
        exact = abs(x0) ** lam / (eta * lam)
        bound = float(thm1_bound(SCALAR_K, eta, lam, x0))
        good = t is not None and abs(t - exact) <= 0.01 * exact and abs(t - bound) <= 0.01 * bound
        ok &= good
        parts.append(f"x0={x0:g}: T={t:.6g} analytic={exact:.6g} thm1={bound:.6g}")
    return ok, "; ".join(parts)


def c2_fixed_time():
    G = ScalingParams("fixed", eta1=1.0, eta2=1.0, lambda1=0.5, lambda2=3.0).apply(_scalar())
    bound = float(thm2_bound(SCALAR_K, 1.0, 1.0, 0.5, 3.0))
    ok, parts = abs(bound - 13.0 / 3.0) < 1e-12, [f"thm2={bound:.6g}"]
    for x0 in FIXED_X0:
        t = _scalar_settle(G, x0)
        quad = fixed_time_oracle(x0)
        good = t is not None and t <= bound and abs(t - quad) <= 0.02 * quad
        ok &= good
        parts.append(f"x0={x0:g}: T={t:.6g} quad={quad:.6g}")
    return ok, "; ".join(parts)


def c3_exponential_contrast():
    F = _scalar()
    ts = np.array([_scalar_settle(F, x0) for x0 in FIXED_X0], dtype=float)
    slope = float(np.polyfit(np.log(FIXED_X0), ts, 1)[0])
    ok = bool(np.all(np.isfinite(ts)) and abs(slope - 1.0) <= 0.05)
    return ok, f"settling times {np.round(ts, 6).tolist()}; slope 1/rho={slope:.6g}"


def _brute_prox(v, mu):
    def obj(w):
        return np.abs(w) + (w - v) ** 2 / (2.0 * mu)
    coarse = np.arange(-20.0, 20.0 + 5e-4, 1e-3)
    w0 = coarse[np.argmin(obj(coarse))]
    fine = w0 + np.arange(-2000, 2001) * 1e-6
    return fine[np.argmin(obj(fine))]


def c4_proximal():
    rng = np.random.default_rng(4)
    v = rng.uniform(-15.0, 15.0, 100)
    mu = rng.uniform(0.1, 3.0, 100)
    prox_err = max(abs(prox_l1(vi, mi) - _brute_prox(vi, mi)) for vi, mi in zip(v, mu))

    grad_err = 0.0
    checked = 0
    h = 1e-6
    while checked < 100:
        m = rng.uniform(0.1, 3.0)
        p = rng.uniform(-10.0, 10.0, 5)
        if np.min(np.abs(np.abs(p) - m)) < 1e-3:
            continue
        fd = np.array([(moreau_value(L1, p + h * e, m) - moreau_value(L1, p - h * e, m)) / (2 * h)
                       for e in np.eye(5)])
        g = moreau_grad(L1, p, m)
        grad_err = max(grad_err, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-300)))
        checked += 1

    a = rng.normal(scale=5.0, size=(1000, 5))
    b = rng.normal(scale=5.0, size=(1000, 5))
    m = rng.uniform(0.1, 3.0, (1000, 1))
    lhs = np.linalg.norm(prox_l1(a, m) - prox_l1(b, m), axis=1)
    worst = float(np.max(lhs - np.linalg.norm(a - b, axis=1)))
    ok = prox_err <= 1e-5 and grad_err <= 1e-5 and worst <= 1e-12
    return ok, (f"prox vs grid {prox_err:.3g}; moreau grad vs FD {grad_err:.3g}; "
                f"nonexpansive excess {worst:.3g}")


def c5_pal_flow():
    cfg = ExperimentConfig(**DESK_LASSO)
    setup = build_setup(cfg)
    res_star = float(np.linalg.norm(setup.field(setup.z_star)))
    traj = integrate(setup.field, np.zeros(setup.z_star.size), IntegrateOptions(t_max=200.0))
    err = float(setup.err_rel(traj.final_state)[0])
    rate = fit_exponential_rate(traj, setup.z_star, tail=0.5)
    ok = err <= 1e-5 and res_star <= 1e-6 and rate.r2 >= 0.99
    return ok, (f"err_rel(t=200)={err:.3g} (need 1e-5); |F(z*)|={res_star:.3g}; "
                f"rho={rate.rho_hat:.4g} r2={rate.r2:.6f}")


def c6_fixed_time_sweep():
    base = ExperimentConfig(**DESK_LASSO, mu=1.0, scaling=FIG3_SCALING,
                            magnitudes=SWEEP_MAGNITUDES,
                            integrator=IntegrateOptions(t_max=5000.0))
    setup = build_setup(base)
    scaled = run_sweep(base, setup)
    plain = run_sweep(base, setup, ScalingParams("none"))
    bound = scaled.rows[0].thm_bound
    settled = all(r.settling_time is not None and r.final_err_rel <= 1e-4 for r in scaled.rows)
    under = settled and all(r.settling_time <= r.thm_bound for r in scaled.rows)
    ratio = settling_ratio(scaled.rows)
    ratio_plain = settling_ratio(plain.rows)
    ok = (settled and under and ratio is not None and ratio <= 3.0
          and ratio_plain is not None and ratio_plain >= 5.0)
    ts = [None if r.settling_time is None else round(r.settling_time, 4) for r in scaled.rows]
    tp = [None if r.settling_time is None else round(r.settling_time, 4) for r in plain.rows]
    m = scaled.metadata
    return ok, (f"scaled T={ts} thm2={bound:.5g} ratio={_g(ratio)} (need <=3); "
                f"unscaled T={tp} ratio={_g(ratio_plain)} (need >=5); "
                f"rho={m['rho_hat']:.4g} L={m['L_hat']:.4g} m={m['m_hat']:.4g} "
                f"beta={m['beta_hat']:.4g}")


def _g(v):
    return "none" if v is None else f"{v:.4g}"


def c7_qp():
    cfg = ExperimentConfig(problem="qp", seed=0, scaling=FIG3_SCALING,
                           magnitudes=SWEEP_MAGNITUDES, integrator=IntegrateOptions(t_max=200.0))
    setup = build_setup(cfg)
    prob = setup.instance
    traj = integrate(setup.field, np.zeros(setup.z_star.size), IntegrateOptions(t_max=3000.0))
    x, y, nu = prob.split(traj.final_state)
    kkt = kkt_residual(prob, x, y, nu)
    min_dual = float(traj.states[:, setup.dual_slice].min())
    sweep = run_sweep(cfg, setup)
    bound = sweep.rows[0].thm_bound
    ts = [r.settling_time for r in sweep.rows]
    settled = all(t is not None for t in ts)
    horizon = max(ts) if settled else None
    ok = kkt <= 1e-6 and min_dual >= -1e-10 and settled and horizon <= bound
    return ok, (f"kkt={kkt:.3g}; min y={min_dual:.3g}; scaled T="
                f"{[None if t is None else round(t, 4) for t in ts]} thm2={bound:.5g}")


def c8_path_equivalence():
    cfg = ExperimentConfig(**DESK_LASSO)
    setup = build_setup(cfg)
    u = sweep_direction(cfg, setup)
    z0 = setup.z_star + u
    r0 = float(np.linalg.norm(z0 - setup.z_star))
    opts = IntegrateOptions(t_max=5000.0, max_displacement=1e-4 * r0,
                            settle_target=setup.z_star, settle_delta=1e-6)
    a = integrate(setup.field, z0, opts)
    b = integrate(FIG3_SCALING.apply(setup.field), z0, opts)
    dist = path_distance(a, b)
    ok = dist <= 1e-3 * r0
    return ok, f"Hausdorff={dist:.3g} (limit {1e-3 * r0:.3g}); samples {len(a)}/{len(b)}"


def c9_decay_inequality():
    params = (1.0, 1.0, 0.5, 3.0)
    G = ScalingParams("fixed", eta1=1.0, eta2=1.0, lambda1=0.5, lambda2=3.0).apply(_scalar())
    c1, a1, c2, a2 = fixed_decay_constants(SCALAR_K, *params)
    clean = inflated = 0
    for x0 in FIXED_X0:
        traj = integrate(G, [x0], IntegrateOptions(t_max=10.0))
        V = traj.states[:, 0] ** 2
        clean += check_decay_inequality(traj, V, c1, a1, c2, a2, slack=1e-3).violations
        inflated += check_decay_inequality(traj, V, 100 * c1, a1, c2, a2, slack=1e-3).violations
    ok = clean == 0 and inflated > 0
    return ok, (f"c1={c1:g} a1={a1:g} c2={c2:g} a2={a2:g}: violations {clean}; "
                f"with 100 c1: {inflated}")


def c10_determinism(work_dir):
    from .reproduce import reproduce

    work_dir = Path(work_dir)
    dirs = [work_dir / "determinism_a", work_dir / "determinism_b"]
    runs = []
    for d in dirs:
        shutil.rmtree(d, ignore_errors=True)
        d.mkdir(parents=True)
        runs.append(reproduce("fig3a", d, seed=7))
    csvs = sorted(o for o in runs[0].outputs if o.endswith(".csv"))
    same = csvs == sorted(o for o in runs[1].outputs if o.endswith(".csv"))
    mism = [c for c in csvs if not filecmp.cmp(dirs[0] / c, dirs[1] / c, shallow=False)]
    ok = same and not mism
    return ok, f"{len(csvs)} CSVs compared; mismatches {len(mism)}"


CRITERIA = (
    (1, "scalar finite-time oracle", 1.0, c1_finite_time),
    (2, "scalar fixed-time uniformity", 5.0, c2_fixed_time),
    (3, "exponential contrast", 1.0, c3_exponential_contrast),
    (4, "proximal calculus", 10.0, c4_proximal),
    (5, "PAL flow correctness", 60.0, c5_pal_flow),
    (6, "fixed-time PAL sweep", 300.0, c6_fixed_time_sweep),
    (7, "generalized Lagrangian QP", 180.0, c7_qp),
    (8, "path equivalence", 60.0, c8_path_equivalence),
    (9, "decay-inequality certification", 1.0, c9_decay_inequality),
    (10, "determinism", 300.0, c10_determinism),
)


def run_criterion(number, work_dir="verify_work") -> CriterionResult:
    num, name, budget, func = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        ok, detail = func(work_dir) if num == 10 else func()
    except Exception as exc:  # noqa: BLE001 - a crash is a failed criterion
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        frame = traceback.extract_tb(exc.__traceback__)[-1]
        detail += f" (at {Path(frame.filename).name}:{frame.lineno})"
    elapsed = time.perf_counter() - t0
    if elapsed > budget:
        ok, detail = False, detail + f"; over the {budget:g} s budget"
    return CriterionResult(num, name, bool(ok), detail, elapsed, budget)


def run_all(work_dir="verify_work", echo=False, numbers=None):
    known = [c[0] for c in CRITERIA]
    numbers = known if numbers is None else list(numbers)
    unknown = sorted(set(numbers) - set(known))
    if unknown:
        raise ValueError(f"unknown criteria {unknown}; valid numbers are 1-{len(known)}")
    results = []
    for num in numbers:
        r = run_criterion(num, work_dir)
        if echo:
            print(f"[{'PASS' if r.passed else 'FAIL'}] {r.number:2d} {r.name} "
                  f"({r.elapsed:.1f} s / {r.budget:g} s)", flush=True)
        results.append(r)
    return results


def format_report(results) -> str:
    lines = [f"{'#':>2}  {'result':6}  {'criterion':32}  detail"]
    for r in results:
        lines.append(f"{r.number:>2}  {'PASS' if r.passed else 'FAIL':6}  {r.name:32}  {r.detail}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"
