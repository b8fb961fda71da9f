"""Compiled core versus pure-Python fallback.

Times single right-hand-side evaluations of each native kernel and full
fixed-time scaled integrations on the desk problems.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--t-max 0.5]
"""
import argparse
import timeit

import numpy as np

from ftflow import _backend
from ftflow.experiments import ExperimentConfig, build_setup, sweep_direction
from ftflow.field import linear_field
from ftflow.integrate import IntegrateOptions, integrate
from ftflow.scaling import fixed_scale


def cases():
    scalar = ExperimentConfig("scalar", n=50)
    lasso = ExperimentConfig("fused_lasso", seed=0, n=40)
    qp = ExperimentConfig("qp", seed=0)
    out = []
    for label, cfg in (("linear n=50", scalar), ("pal_l1 n=40", lasso), ("genlag qp", qp)):
        setup = build_setup(cfg)
        if cfg.problem == "scalar":
            rng = np.random.default_rng(0)
            setup.field = linear_field(-np.eye(50) + 0.1 * rng.standard_normal((50, 50)))
        z0 = setup.z_star + 10.0 * sweep_direction(cfg, setup)
        out.append((label, setup.field, z0))
    return out


def best_of(func, repeat, number):
    return min(timeit.repeat(func, repeat=repeat, number=number)) / number


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--t-max", type=float, default=0.5)
    args = p.parse_args()
    if "compiled" not in _backend.available():
        raise SystemExit("ftflow._core is not built; nothing to compare")

    print(f"{'case':14} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for label, field, z0 in cases():
        native = _backend.core.make_field(field.kernel.kind, field.kernel.data)
        t_py = best_of(lambda: field(z0), args.repeat, 2000)
        t_c = best_of(lambda: native(z0), args.repeat, 2000)
        print(f"{label + ' rhs':14} {t_py * 1e6:10.2f}us {t_c * 1e6:10.2f}us {t_py / t_c:7.1f}x")

    opts = IntegrateOptions(t_max=args.t_max)
    for label, field, z0 in cases():
        scaled = fixed_scale(field)
        runs = {}
        for backend in ("python", "compiled"):
            runs[backend] = best_of(lambda: integrate(scaled, z0, opts, backend=backend),
                                    max(1, args.repeat // 2), 1)
        steps = integrate(scaled, z0, opts).n_accepted
        print(f"{label + ' ode':14} {runs['python'] * 1e3:10.1f}ms {runs['compiled'] * 1e3:10.1f}ms "
              f"{runs['python'] / runs['compiled']:7.1f}x  ({steps} steps)")


if __name__ == "__main__":
    main()
