"""CSV and manifest writers shared by the command-line entry points."""
from __future__ import annotations

import csv
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._backend import BACKEND

TRAJECTORY_COLUMNS = ("t", "err_rel", "field_norm", "sigma", "V_surrogate")
SWEEP_COLUMNS = ("magnitude", "settling_time", "thm_bound", "final_err_rel", "terminated_by")


class OutputError(RuntimeError):
    """Refusing to write a non-finite number."""


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    v = float(v)
    if not np.isfinite(v):
        raise OutputError(f"non-finite value {v!r} in output")
    return format(v, ".17g")


def write_csv(path, columns, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def trajectory_rows(traj, z_star):
    z_star = np.asarray(z_star, dtype=float)
    dist = traj.errors(z_star)
    err = dist / max(1.0, float(np.linalg.norm(z_star)))
    return zip(traj.times, err, traj.field_norms, traj.sigma_values, dist ** 2)


def write_trajectory(path, traj, z_star):
    return write_csv(path, TRAJECTORY_COLUMNS, trajectory_rows(traj, z_star))


def write_sweep(path, rows):
    return write_csv(path, SWEEP_COLUMNS,
                     ((r.magnitude, r.settling_time, r.thm_bound,
                       None if r.flagged else r.final_err_rel, r.terminated_by) for r in rows))


def versions() -> str:
    return (f"ftflow {__version__} ({BACKEND} backend); numpy {np.__version__}; "
            f"scipy {scipy.__version__}; python {platform.python_version()}")


def write_manifest(out_dir, command, config_digest, outputs, wall_time, extra=None):
    """Plain ``key: value`` manifest; ``outputs`` are paths relative to ``out_dir``."""
    out_dir = Path(out_dir)
    missing = [o for o in outputs if not (out_dir / o).exists()]
    if missing:
        raise OutputError(f"listed outputs missing: {missing}")
    lines = [f"command: {command}", f"config_digest: {config_digest}",
             f"outputs: {', '.join(str(o) for o in outputs)}",
             f"wall_time: {wall_time:.3f}", f"versions: {versions()}"]
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {fmt(value) if not isinstance(value, (int, str)) else value}")
    path = out_dir / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path
