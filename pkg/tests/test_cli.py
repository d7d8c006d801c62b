import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hplateau import cli
from hplateau.cli import ConfigError, main, parse_config, parse_domain, read_config_file
from hplateau.domain import Ball, ModifiedCylinder
from hplateau.hpmesh import read_hpmesh
from hplateau.mesh import validate_disk


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


# ---------------------------------------------------------------- parsing


def test_parse_domain():
    assert parse_domain("ball:2") == Ball(2.0)
    assert parse_domain("modcyl:0.05") == ModifiedCylinder(0.05)
    for bad in ("ball:x", "ball:-1", "box:1", "modcyl:0.5"):
        with pytest.raises(ConfigError):
            parse_domain(bad)


def test_config_file_and_flag_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# solver settings\nmax-iters = 3\nH = 0.25\n\ncurve=rho09\n")
    assert read_config_file(str(path)) == {"max-iters": "3", "H": "0.25", "curve": "rho09"}
    cfg = parse_config(["solve", "--config", str(path)])
    assert (cfg.max_iters, cfg.H, cfg.curve) == (3, 0.25, "rho09")
    cfg = parse_config(["solve", "--config", str(path), "--max-iters", "50"])
    assert cfg.max_iters == 50 and cfg.H == 0.25


def test_config_file_rejects_unknown_keys(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("colour = blue\n")
    assert main(["solve", "--config", str(path)]) == 2


@pytest.mark.parametrize("args", [
    ["solve", "--jobs", "0"],
    ["solve", "--tol", "0"],
    ["solve", "--max-iters", "0"],
    ["launch"],
    ["solve", "--H", "abc"],
])
def test_invalid_arguments_exit_2(args):
    assert main(args) == 2


# ---------------------------------------------------------------- commands


def test_solve_writes_outputs(tmp_path):
    code, out = run(tmp_path, "solve", "--resolution", "300")
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["config"]["H"] == 0.5 and rep["report"]["converged"]
    disk = read_hpmesh(str(out / "disk_minus.hpmesh"))
    assert validate_disk(disk).is_disk
    assert (out / "summary.txt").read_text().startswith("solve equator")


def test_solve_is_byte_identical_across_runs(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    args = ["solve", "--curve", "circle:0.2", "--resolution", "300", "--H", "0.3", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    for name in ("report.json", "summary.txt", "disk_minus.hpmesh"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_infeasible_curvature_exit_2(tmp_path, capsys):
    code, _ = run(tmp_path, "solve", "--H", "1.5", "--resolution", "300")
    assert code == 2
    assert "[0, 1)" in capsys.readouterr().err


def test_cylinder_domain_rejected_for_solve(tmp_path):
    assert run(tmp_path, "solve", "--domain", "modcyl:0.05")[0] == 2


def test_unknown_curve_exit_2(tmp_path):
    assert run(tmp_path, "solve", "--curve", "trefoil")[0] == 2


def test_non_convergence_exit_3(tmp_path):
    code, out = run(tmp_path, "solve", "--resolution", "300", "--max-iters", "1")
    assert code == 3
    assert not json.loads((out / "report.json").read_text())["report"]["converged"]


def test_counterexample_slope(tmp_path):
    code, out = run(tmp_path, "counterexample", "--H", "1.5", "--domain", "modcyl:0.05", "--n-max", "4")
    assert code == 0
    fit = json.loads((out / "report.json").read_text())["report"]
    assert fit["slope"] == pytest.approx(-math.pi, rel=1e-3)
    assert fit["relative_slope_error"] <= 1e-3


def test_counterexample_validates_inputs(tmp_path):
    assert run(tmp_path, "counterexample", "--H", "2.5")[0] == 2
    assert run(tmp_path, "counterexample", "--n-max", "1")[0] == 2


def test_rellich_writes_both_sides(tmp_path):
    code, out = run(tmp_path, "rellich", "--resolution", "300")
    assert code == 0
    lo = read_hpmesh(str(out / "disk_minus.hpmesh"))
    hi = read_hpmesh(str(out / "disk_plus.hpmesh"))
    assert np.max(lo.vertices[:, 2]) <= 1e-12 < np.max(hi.vertices[:, 2])


def test_oracle_emits_curve_usable_by_solve(tmp_path):
    fx = tmp_path / "fx"
    assert main(["oracle", "--curve", "gamma1_bridge", "--resolution", "300", "--out", str(fx)]) == 0
    manifest = json.loads((fx / "manifest.json").read_text())
    assert manifest["id"] == "gamma1_bridge"
    code, out = run(tmp_path, "solve", "--curve", str(fx), "--resolution", "300")
    assert code == 0


def test_oracle_unknown_scenario(tmp_path):
    assert run(tmp_path, "oracle", "--curve", "nope")[0] == 2


def test_verify_reports_failures(tmp_path, monkeypatch):
    checks = (lambda seed: ("ok", True, {}), lambda seed: ("broken", False, {"seed": seed}))
    monkeypatch.setattr(cli, "VERIFY_CHECKS", checks)
    code, out = run(tmp_path, "verify", "--jobs", "2")
    assert code == 1
    rep = json.loads((out / "report.json").read_text())["report"]
    assert rep == {"ok": {"passed": True, "details": {}}, "broken": {"passed": False, "details": {"seed": 0}}}
    assert (out / "summary.txt").read_text() == "PASS ok\nFAIL broken\n"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hplateau", "counterexample", "--n-max", "2",
                           "--H", "1.0", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "slope=" in proc.stdout
