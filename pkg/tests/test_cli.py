import csv
import json
import subprocess
import sys

import pytest

from minimax_egm.cli import main


def test_solve_converges(tmp_path):
    out = tmp_path / "run"
    code = main(["solve", "--problem", "quadratic", "--s", "0.02", "--lambda", "0.5", "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "Converged"
    with open(out / "trajectory.csv") as fh:
        assert next(csv.reader(fh)) == ["iter", "residual", "ratio", "x0", "y0"]


def test_solve_refuses_overwrite(tmp_path):
    args = ["solve", "--s", "0.02", "--lambda", "0.5", "--out", str(tmp_path)]
    assert main(args) == 0
    assert main(args) == 1
    assert main(args + ["--force"]) == 0


def test_solve_gda_diverges(tmp_path):
    code = main(["solve", "--method", "gda", "--rho", "0", "--A", "1", "--s", "0.1", "--out", str(tmp_path)])
    assert code == 2
    assert json.loads((tmp_path / "summary.json").read_text())["status"] == "Diverged"


def test_solve_ppm(tmp_path):
    code = main(["solve", "--method", "ppm", "--s", "0.02", "--lambda", "0.5", "--out", str(tmp_path)])
    assert code == 0


def test_usage_errors(tmp_path):
    assert main(["solve", "--s", "0.1", "--lambda", "1.5", "--out", str(tmp_path)]) == 1
    assert main(["solve", "--s", "0.1", "--x0", "1,2", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == 1


def test_certify_feasible(tmp_path):
    code = main(["certify", "--s", "0.02", "--lambda", "0.05", "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "certify.json").read_text())
    assert payload["feasible"] is True
    assert payload["comonotonicity"]["passed"] is True


def test_certify_infeasible(tmp_path):
    assert main(["certify", "--rho", "1", "--A", "0.5", "--s", "0.1", "--out", str(tmp_path)]) == 3


def test_certify_step_too_large(tmp_path):
    assert main(["certify", "--rho", "1", "--s", "1.5", "--out", str(tmp_path)]) == 3
    assert json.loads((tmp_path / "certify.json").read_text())["error"] == "StepTooLarge"


def test_sweep(tmp_path):
    code = main([
        "sweep", "--s-values", "0.02,0.05", "--lambda-values", "0.5", "--start-grid", "2",
        "--budget", "2000", "--out", str(tmp_path),
    ])
    assert code == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 2 * 4


def test_tightness_small(tmp_path):
    code = main(["tightness", "--s-values", "0.001,0.02", "--lambda-values", "0.5,1", "--budget", "20000", "--out", str(tmp_path)])
    assert code == 0
    assert json.loads((tmp_path / "meta.json").read_text())["passed"] is True


def test_approx_order(tmp_path):
    assert main(["approx-order", "--problem", "quartic", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "approx_order.json").read_text())["slope"] >= 2.5


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "minimax_egm", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
