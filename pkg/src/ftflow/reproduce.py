"""Trajectory sets contrasting unscaled and fixed-time scaled flows.

``fig3a`` uses the fused-lasso proximal augmented Lagrangian flow and
``fig3b`` the generalized Lagrangian flow of the desk quadratic program.
Each run writes one trajectory CSV per (initial magnitude, dynamics) pair,
a settling-time sweep of the scaled dynamics and a log-scale SVG plot.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .experiments import (DEFAULT_MAGNITUDES, FIG3_SCALING, ExperimentConfig, build_setup,
                          run_sweep, sweep_direction)
from .integrate import IntegrateOptions, integrate
from .output import write_csv, write_sweep, write_trajectory
from .scaling import ScalingParams
from .svg import log_plot

FIGURES = {
    "fig3a": dict(problem="fused_lasso", n=40, title="fused lasso, proximal augmented Lagrangian"),
    "fig3b": dict(problem="qp", n=None, title="quadratic program, generalized Lagrangian"),
}
HORIZON = 20.0


@dataclass
class FigureRun:
    outputs: list
    config: ExperimentConfig
    metadata: dict


def figure_config(figure: str, seed: int = 0) -> ExperimentConfig:
    if figure not in FIGURES:
        raise ValueError(f"figure must be one of {tuple(FIGURES)}, got {figure!r}")
    spec = FIGURES[figure]
    return ExperimentConfig(problem=spec["problem"], seed=seed, mu=1.0, scaling=FIG3_SCALING,
                            magnitudes=DEFAULT_MAGNITUDES, n=spec["n"],
                            integrator=IntegrateOptions(t_max=HORIZON))


def reproduce(figure: str, out_dir, seed: int = 0) -> FigureRun:
    cfg = figure_config(figure, seed)
    out_dir = Path(out_dir)
    setup = build_setup(cfg)
    u = sweep_direction(cfg, setup)
    outputs, series = [], []
    variants = (("unscaled", ScalingParams("none"), False), ("scaled", cfg.scaling, True))
    min_dual = np.inf
    for k, s in enumerate(cfg.magnitudes):
        z0 = setup.z_star + s * u
        for tag, params, dashed in variants:
            traj = integrate(params.apply(setup.field), z0, cfg.integrator)
            name = f"{figure}_{tag}_{k}.csv"
            write_trajectory(out_dir / name, traj, setup.z_star)
            outputs.append(name)
            series.append((f"{tag} s={s:g}", traj.times, setup.err_rel(traj.states), dashed))
            if setup.dual_slice is not None:
                duals = traj.states[:, setup.dual_slice].min(axis=1)
                min_dual = min(min_dual, float(duals.min()))
                dname = f"{figure}_{tag}_{k}_duals.csv"
                write_csv(out_dir / dname, ("t", "min_dual"), zip(traj.times, duals))
                outputs.append(dname)
    sweep_cfg = replace(cfg, integrator=replace(cfg.integrator, t_max=max(HORIZON, 200.0)))
    sweep = run_sweep(sweep_cfg, setup)
    write_sweep(out_dir / f"{figure}_sweep.csv", sweep.rows)
    outputs.append(f"{figure}_sweep.csv")
    svg = log_plot(series, title=FIGURES[figure]["title"], ylabel="relative error")
    (out_dir / f"{figure}.svg").write_text(svg)
    outputs.append(f"{figure}.svg")
    meta = dict(sweep.metadata)
    meta.update(figure=figure, magnitudes=", ".join(f"{s:g}" for s in cfg.magnitudes),
                horizon=HORIZON, thm_bound=sweep.rows[0].thm_bound,
                settling_times=", ".join("" if r.settling_time is None
                                         else format(r.settling_time, ".6g")
                                         for r in sweep.rows))
    if setup.dual_slice is not None:
        meta["min_dual"] = min_dual
    return FigureRun(outputs, cfg, meta)
