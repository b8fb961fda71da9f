"""``ftflow`` command-line interface.

    ftflow run --config <path> --out <dir>
    ftflow sweep --config <path> --out <dir>
    ftflow reproduce <fig3a|fig3b> --out <dir> [--seed N]
    ftflow verify --out <dir>

Exit status: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import build_setup, run_sweep, sweep_direction
from .integrate import IntegrationError, integrate
from .output import write_manifest, write_sweep, write_trajectory

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    t0 = time.perf_counter()
    cfg, digest = load_config(args.config)
    out = _out_dir(args.out)
    setup = build_setup(cfg)
    u = sweep_direction(cfg, setup)
    field = cfg.scaling.apply(setup.field)
    outputs, status, extra = [], "ok", {}
    for k, s in enumerate(cfg.magnitudes):
        try:
            traj = integrate(field, setup.z_star + s * u, cfg.integrator)
        except IntegrationError as exc:
            status = f"failed at magnitude {s:g}: {exc}"
            break
        name = f"trajectory_{k}.csv"
        write_trajectory(out / name, traj, setup.z_star)
        outputs.append(name)
        extra[f"{name}"] = f"magnitude={s:g} terminated_by={traj.terminated_by}"
    extra = {"status": status, "reference_digest": setup.digest(), **extra}
    write_manifest(out, "run", digest, outputs, time.perf_counter() - t0, extra)
    if status != "ok":
        print(f"ftflow run: {status}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    cfg, digest = load_config(args.config)
    out = _out_dir(args.out)
    result = run_sweep(cfg)
    write_sweep(out / "sweep.csv", result.rows)
    flagged = [r.magnitude for r in result.rows if r.flagged]
    extra = dict(result.metadata)
    extra["status"] = "ok" if not flagged else f"flagged rows at magnitudes {flagged}"
    write_manifest(out, "sweep", digest, ["sweep.csv"], time.perf_counter() - t0, extra)
    return EXIT_OK if not flagged else EXIT_RUNTIME


def cmd_reproduce(args) -> int:
    from .reproduce import reproduce

    t0 = time.perf_counter()
    out = _out_dir(args.out)
    run = reproduce(args.figure, out, seed=args.seed)
    digest = hashlib.sha256(repr(run.config).encode()).hexdigest()
    write_manifest(out, f"reproduce {args.figure}", digest, run.outputs,
                   time.perf_counter() - t0, run.metadata)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import acceptance
    from .flows import inject_fault

    numbers = None
    if args.criteria:
        try:
            numbers = [int(v) for v in args.criteria.split(",") if v.strip()]
        except ValueError:
            numbers = []
        if not numbers:
            raise ConfigError(f"expected comma-separated integers, got {args.criteria!r}",
                              None, "--criteria")
    out = _out_dir(args.out)
    work = out / "verify_work"
    try:
        if args.inject_fault:
            with inject_fault(args.inject_fault):
                results = acceptance.run_all(work, echo=True, numbers=numbers)
        else:
            results = acceptance.run_all(work, echo=True, numbers=numbers)
    except ValueError as exc:
        raise ConfigError(str(exc), None, "verify") from None
    report = acceptance.format_report(results)
    (out / "verify_report.txt").write_text(report)
    print(report, end="")
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftflow", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, func, helptext in (("run", cmd_run, "integrate one trajectory per magnitude"),
                                 ("sweep", cmd_sweep, "settling time versus magnitude")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        sp.set_defaults(func=func)
    sp = sub.add_parser("reproduce", help="unscaled versus fixed-time trajectories")
    sp.add_argument("figure", choices=("fig3a", "fig3b"))
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_reproduce)
    sp = sub.add_parser("verify", help="run the acceptance suite")
    sp.add_argument("--out", required=True)
    sp.add_argument("--criteria", default=None, help="comma-separated subset, e.g. 1,3,9")
    sp.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", 0) < 0:
        print("ftflow: error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ftflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"ftflow: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
