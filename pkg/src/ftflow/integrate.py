"""Adaptive Dormand-Prince 5(4) integration with settling diagnostics.

Two interchangeable loops implement :func:`integrate`: the compiled one in
``ftflow._core`` (used when the field carries a :class:`~ftflow.field.KernelSpec`)
and the pure-Python loop below, which accepts any callable field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.spatial import cKDTree

from . import _backend
from .field import VectorField, _as_state
from .scaling import VARIANTS, ScaledField, ScalingParams, ZERO_BAND

TERMINATIONS = ("t_max", "field_norm", "settle_event", "step_underflow")

MAX_REJECTS = 50
STALL_WINDOW = 200
SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 5.0
# PI exponents (Hairer, Norsett & Wanner, order 5 pair)
ALPHA, BETA = 0.7 / 5.0, 0.4 / 5.0

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)


class IntegrationError(RuntimeError):
    """A non-finite state was produced; ``last_time`` is the last valid time."""

    def __init__(self, message, last_time):
        super().__init__(f"{message} (last valid time {last_time!r})")
        self.last_time = last_time


@dataclass
class IntegrateOptions:
    t_max: float = 10.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    h_init: Optional[float] = None
    h_max: Optional[float] = None
    stop_field_norm: float = 1e-10
    record_stride: Union[int, str] = "all"
    # optional early exit once ||z - settle_target|| <= settle_delta * max(1, ||target||)
    settle_target: Optional[np.ndarray] = None
    settle_delta: Optional[float] = None
    # caps each step so that h * ||rhs|| stays below this (dense sampling of the path)
    max_displacement: Optional[float] = None
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.stop_field_norm < 0:
            raise ValueError("stop_field_norm must be nonnegative")
        if self.record_stride != "all" and int(self.record_stride) < 1:
            raise ValueError("record_stride must be a positive integer or 'all'")
        if (self.settle_target is None) != (self.settle_delta is None):
            raise ValueError("settle_target and settle_delta go together")

    @property
    def stride(self) -> int:
        return 1 if self.record_stride == "all" else int(self.record_stride)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    field_norms: np.ndarray
    sigma_values: np.ndarray
    terminated_by: str
    n_accepted: int = 0
    n_rejected: int = 0
    message: str = ""
    backend: str = "python"

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self):
        return self.states[-1]

    def errors(self, target) -> np.ndarray:
        return np.linalg.norm(self.states - np.asarray(target, dtype=float), axis=1)


def _split_field(field: VectorField):
    """Return ``(base, ScalingParams)`` for scaled or plain fields."""
    if isinstance(field, ScaledField):
        return field.base, field.params
    return field, ScalingParams("none")


def _python_rhs(field: VectorField):
    if isinstance(field, ScaledField):
        return field.evaluate

    func = field.func

    def rhs(z):
        F = np.asarray(func(z), dtype=float)
        return F, float(np.linalg.norm(F)), 1.0

    return rhs


def default_h_init(g_norm: float) -> float:
    return min(1e-3, 0.1 / (1.0 + g_norm))


def integrate(field: VectorField, x0, opts: Optional[IntegrateOptions] = None,
              backend: Optional[str] = None) -> Trajectory:
    """Integrate ``z' = field(z)`` from ``x0``.

    Terminates at ``t_max``, when the norm of the right-hand side drops to
    ``stop_field_norm``, at the optional settle event, or when the step size
    underflows (more than 50 consecutive rejections, or ``h < 1e-14 t``).

    Scaled fields are not Lipschitz at the equilibrium and an explicit step
    there overshoots or stalls on a spurious fixed point of the step map. A
    step is stalled when it moves less than ten tolerance bands while either
    reversing the field direction or moving less than a tenth of ``h ||G||``.
    After ``STALL_WINDOW`` consecutive stalled steps whose net displacement
    is also within the band, the run ends as ``field_norm``. The window keeps
    stiff but still converging stretches (steps pinned at the stability limit
    of a fast mode while a slow mode creeps in) from being mistaken for
    arrival.

    ``backend`` is ``"compiled"``, ``"python"`` or ``None`` (compiled when
    available and the field has a native kernel).
    """
    opts = opts or IntegrateOptions()
    z0 = _as_state(field, x0).copy()
    if not np.all(np.isfinite(z0)):
        raise IntegrationError("non-finite initial state", 0.0)
    base, params = _split_field(field)
    use = backend or _backend.BACKEND
    if use == "compiled":
        if _backend.core is None:
            if backend == "compiled":
                raise RuntimeError("compiled backend requested but ftflow._core is not built")
        elif base.kernel is not None:
            return _integrate_compiled(base, params, z0, opts)
        elif backend == "compiled":
            raise ValueError(f"field {field.name!r} has no native kernel")
    elif use != "python":
        raise ValueError(f"unknown backend {use!r}")
    return _integrate_python(_python_rhs(field), z0, opts, params.variant != "none")


def _integrate_compiled(base, params, z0, opts):
    core = _backend.core
    native = core.make_field(base.kernel.kind, base.kernel.data)
    pvec = np.array([params.eta, params.lam, params.eta1, params.eta2,
                     params.lambda1, params.lambda2], dtype=float)
    has_settle = opts.settle_target is not None
    target = (np.ascontiguousarray(opts.settle_target, dtype=float) if has_settle
              else np.zeros(base.dim))
    thr = (opts.settle_delta * max(1.0, float(np.linalg.norm(target)))) if has_settle else -1.0
    out = core.integrate(
        native, VARIANTS.index(params.variant), pvec, z0,
        float(opts.t_max), float(opts.rel_tol), float(opts.abs_tol),
        -1.0 if opts.h_init is None else float(opts.h_init),
        math.inf if opts.h_max is None else float(opts.h_max),
        float(opts.stop_field_norm), opts.stride, target, thr,
        math.inf if opts.max_displacement is None else float(opts.max_displacement),
        int(opts.max_steps), ZERO_BAND)
    times, states, fnorms, sigmas, code, n_acc, n_rej, msg = out
    if code < 0:
        raise IntegrationError(msg, float(times[-1]))
    return Trajectory(times, states, fnorms, sigmas, TERMINATIONS[code],
                      n_acc, n_rej, msg, "compiled")


def _integrate_python(rhs, z, opts: IntegrateOptions, scaled: bool) -> Trajectory:
    t_max, rtol, atol = float(opts.t_max), float(opts.rel_tol), float(opts.abs_tol)
    h_max = math.inf if opts.h_max is None else float(opts.h_max)
    max_disp = math.inf if opts.max_displacement is None else float(opts.max_displacement)
    stride = opts.stride
    has_settle = opts.settle_target is not None
    if has_settle:
        target = np.asarray(opts.settle_target, dtype=float)
        thr = opts.settle_delta * max(1.0, float(np.linalg.norm(target)))

    k1, fn, sg = rhs(z)
    if not (np.all(np.isfinite(k1)) and math.isfinite(fn)):
        raise IntegrationError("non-finite field at initial state", 0.0)
    t = 0.0
    times, states, fnorms, sigmas = [t], [z.copy()], [fn], [sg]
    gnorm = float(np.linalg.norm(k1))

    def done(gn, zz):
        if gn <= opts.stop_field_norm:
            return "field_norm"
        if has_settle and float(np.linalg.norm(zz - target)) <= thr:
            return "settle_event"
        return None

    term = done(gnorm, z)
    n_acc = n_rej = rejects = stalled = 0
    message = ""
    if term is None:
        h = default_h_init(gnorm) if opts.h_init is None else float(opts.h_init)
        h = min(h, h_max, t_max)
        err_prev = 1e-4
        last_rejected = bad_trial = False
        znorm = float(np.linalg.norm(z))
        while True:
            if gnorm * h > max_disp:
                h = max_disp / gnorm
            last = t + h >= t_max * (1.0 - 1e-12)
            if last:
                h = t_max - t
            k2 = rhs(z + h * (A21 * k1))[0]
            k3 = rhs(z + h * (A31 * k1 + A32 * k2))[0]
            k4 = rhs(z + h * (A41 * k1 + A42 * k2 + A43 * k3))[0]
            k5 = rhs(z + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))[0]
            k6 = rhs(z + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))[0]
            z_new = z + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7, fn, sg = rhs(z_new)
            err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            znew_norm = float(np.linalg.norm(z_new))
            scale = atol + rtol * max(znorm, znew_norm)
            errn = float(np.linalg.norm(err)) / scale
            if not math.isfinite(errn) or not np.all(np.isfinite(k7)):
                errn = math.inf
            if errn <= 1.0:
                t = t_max if last else t + h
                clamp = False
                if scaled:
                    disp = float(np.linalg.norm(z_new - z))
                    band = 10.0 * (atol + rtol * znew_norm)
                    if disp <= band and (float(k1 @ k7) < 0.0 or disp < 0.1 * h * gnorm):
                        if stalled == 0:
                            anchor = z
                        stalled += 1
                        if stalled >= STALL_WINDOW:
                            clamp = float(np.linalg.norm(z_new - anchor)) <= band
                            stalled = 0
                    else:
                        stalled = 0
                z, k1, znorm = z_new, k7, znew_norm
                gnorm = float(np.linalg.norm(k1))
                n_acc += 1
                rejects = 0
                term = done(gnorm, z)
                if term is None and clamp:
                    term, message = "field_norm", f"clamped at equilibrium band, t={t!r}"
                if term is None and last:
                    term = "t_max"
                if term is None and n_acc >= opts.max_steps:
                    term, message = "t_max", f"max_steps={opts.max_steps} reached"
                if term is not None or n_acc % stride == 0:
                    times.append(t)
                    states.append(z.copy())
                    fnorms.append(fn)
                    sigmas.append(sg)
                if term is not None:
                    break
                fac = SAFETY * max(errn, 1e-10) ** -ALPHA * err_prev ** BETA
                fac = min(FAC_MAX, max(FAC_MIN, fac))
                if last_rejected:
                    fac = min(fac, 1.0)
                err_prev = max(errn, 1e-4)
                h = min(h * fac, h_max)
                last_rejected = False
            else:
                n_rej += 1
                rejects += 1
                if rejects > MAX_REJECTS:
                    term = "step_underflow"
                    message = f"{rejects} consecutive rejections at t={t!r}"
                    break
                bad_trial = not math.isfinite(errn)
                fac = FAC_MIN if bad_trial else max(FAC_MIN, SAFETY * errn ** -0.2)
                h *= fac
                last_rejected = True
            if h < 1e-14 * t:
                term = "step_underflow"
                message = f"step size {h!r} underflowed at t={t!r}"
                break
        if term == "step_underflow" and last_rejected and bad_trial:
            raise IntegrationError("non-finite field values", t)
        if times[-1] != t:
            _, fn, sg = rhs(z)
            times.append(t)
            states.append(z.copy())
            fnorms.append(fn)
            sigmas.append(sg)
    return Trajectory(np.array(times), np.array(states), np.array(fnorms),
                      np.array(sigmas), term, n_acc, n_rej, message, "python")


def settling_time(traj: Trajectory, target, delta_rel: float) -> Optional[float]:
    """First entry time into the ball ``||z - target|| <= delta_rel * max(1, ||target||)``.

    Linearly interpolates the distance between the bracketing samples.
    Returns ``None`` when the ball is never reached.
    """
    target = np.asarray(target, dtype=float).reshape(-1)
    if target.size != traj.states.shape[1]:
        raise ValueError("target dimension does not match the trajectory")
    thr = delta_rel * max(1.0, float(np.linalg.norm(target)))
    dist = traj.errors(target)
    inside = np.nonzero(dist <= thr)[0]
    if inside.size == 0:
        return None
    k = int(inside[0])
    if k == 0:
        return float(traj.times[0])
    d0, d1 = dist[k - 1], dist[k]
    t0, t1 = traj.times[k - 1], traj.times[k]
    return float(t0 + (d0 - thr) / (d0 - d1) * (t1 - t0))


def path_distance(a: Trajectory, b: Trajectory) -> float:
    """Symmetric discrete Hausdorff distance between two sampled paths."""
    A = a.states if isinstance(a, Trajectory) else np.atleast_2d(a)
    B = b.states if isinstance(b, Trajectory) else np.atleast_2d(b)
    if A.shape[1] != B.shape[1]:
        raise ValueError("trajectories have different state dimensions")
    da, _ = cKDTree(B).query(A, k=1)
    db, _ = cKDTree(A).query(B, k=1)
    return float(max(np.max(da), np.max(db)))
