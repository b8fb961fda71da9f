import csv
import filecmp
import subprocess
import sys

import numpy as np
import pytest

from ftflow import cli
from ftflow.integrate import IntegrationError
from ftflow.output import SWEEP_COLUMNS, TRAJECTORY_COLUMNS

SCALAR = """problem = scalar
mu = 1
t_max = 5
magnitudes = 1, 100
"""


def ftflow(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "ftflow", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def manifest(path):
    return dict(line.split(": ", 1) for line in path.read_text().splitlines())


@pytest.fixture
def scalar_cfg(tmp_path):
    p = tmp_path / "scalar.cfg"
    p.write_text(SCALAR)
    return p


def test_run_writes_trajectories(scalar_cfg, tmp_path):
    out = tmp_path / "run"
    res = ftflow("run", "--config", scalar_cfg, "--out", out)
    assert res.returncode == 0, res.stderr
    for k in (0, 1):
        header, rows = read_csv(out / f"trajectory_{k}.csv")
        assert tuple(header) == TRAJECTORY_COLUMNS
        data = np.array(rows, dtype=float)
        assert data[0, 0] == 0.0 and np.all(np.diff(data[:, 0]) > 0)
        # monotone up to chatter inside the abs_tol band around the equilibrium
        assert np.all(np.diff(data[:, 1]) <= 1e-9)
        assert data[-1, 1] <= 1e-8
        np.testing.assert_allclose(data[:, 4], (data[:, 1]) ** 2, rtol=1e-12)
    m = manifest(out / "manifest.txt")
    assert m["command"] == "run" and m["status"] == "ok"
    assert m["outputs"] == "trajectory_0.csv, trajectory_1.csv"
    assert len(m["config_digest"]) == 64 and "numpy" in m["versions"]


def test_run_is_deterministic(scalar_cfg, tmp_path):
    for d in ("a", "b"):
        assert ftflow("run", "--config", scalar_cfg, "--out", tmp_path / d).returncode == 0
    assert filecmp.cmp(tmp_path / "a/trajectory_1.csv", tmp_path / "b/trajectory_1.csv",
                       shallow=False)


def test_sweep_writes_table(scalar_cfg, tmp_path):
    out = tmp_path / "sweep"
    res = ftflow("sweep", "--config", scalar_cfg, "--out", out)
    assert res.returncode == 0, res.stderr
    header, rows = read_csv(out / "sweep.csv")
    assert tuple(header) == SWEEP_COLUMNS
    assert [float(r[0]) for r in rows] == [1.0, 100.0]
    for r in rows:
        assert float(r[1]) <= float(r[2])
        assert r[4] == "settle_event"


def test_missing_mu_is_a_config_error(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("problem = scalar\n")
    res = ftflow("run", "--config", p, "--out", tmp_path / "o")
    assert res.returncode == 2
    assert "'mu'" in res.stderr


def test_bad_line_reports_position(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("problem = scalar\nmu = 1\nspeed = 3\n")
    res = ftflow("sweep", "--config", p, "--out", tmp_path / "o")
    assert res.returncode == 2
    assert f"{p}:3:" in res.stderr


def test_missing_config_file(tmp_path):
    assert ftflow("run", "--config", tmp_path / "nope.cfg", "--out", tmp_path).returncode == 2


def test_bad_arguments(tmp_path):
    assert ftflow("reproduce", "fig9", "--out", tmp_path).returncode == 2
    assert ftflow("reproduce", "fig3b", "--out", tmp_path, "--seed", "-1").returncode == 2
    assert ftflow("run", "--out", tmp_path).returncode == 2


def test_runtime_failure_exit_code(scalar_cfg, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise IntegrationError("non-finite field values", 0.5)
    monkeypatch.setattr(cli, "integrate", boom)
    assert cli.main(["run", "--config", str(scalar_cfg), "--out", str(tmp_path / "o")]) == 1
    assert "failed" in manifest(tmp_path / "o/manifest.txt")["status"]


def test_reproduce_qp_figure(tmp_path):
    out = tmp_path / "f"
    res = ftflow("reproduce", "fig3b", "--out", out, "--seed", 2)
    assert res.returncode == 0, res.stderr
    m = manifest(out / "manifest.txt")
    listed = m["outputs"].split(", ")
    assert {"fig3b_sweep.csv", "fig3b.svg", "fig3b_scaled_0.csv",
            "fig3b_unscaled_4_duals.csv"} <= set(listed)
    assert float(m["min_dual"]) >= 0.0
    assert (out / "fig3b.svg").read_text().startswith("<svg")
    header, _ = read_csv(out / "fig3b_unscaled_0.csv")
    assert tuple(header) == TRAJECTORY_COLUMNS
    res2 = ftflow("reproduce", "fig3b", "--out", tmp_path / "g", "--seed", 2)
    assert res2.returncode == 0
    for name in listed:
        assert filecmp.cmp(out / name, tmp_path / "g" / name, shallow=False), name


def test_verify_subset(tmp_path):
    res = ftflow("verify", "--out", tmp_path, "--criteria", "1,3,9")
    assert res.returncode == 0, res.stdout + res.stderr
    report = (tmp_path / "verify_report.txt").read_text()
    assert "3/3 criteria passed" in report
    assert ftflow("verify", "--out", tmp_path, "--criteria", "11").returncode == 2


def test_verify_catches_injected_fault(tmp_path):
    res = ftflow("verify", "--out", tmp_path, "--criteria", "5",
                 "--inject-fault", "pal_dual_sign")
    assert res.returncode == 1
    assert "FAIL" in (tmp_path / "verify_report.txt").read_text()
