from __future__ import annotations

import csv
import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from logbonnet.cli import main

CONFIGS = Path(__file__).parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_laplacian_k1(capsys):
    code, out, _ = run(capsys, "laplacian", "-k", "1", str(math.exp(-1.0)), "--json")
    row = json.loads(out)["rows"][0]
    assert code == 0
    assert row["laplacian"] == pytest.approx(-math.e**2, rel=1e-12)
    assert row["fd_relative_error"] < 1e-6


def test_laplacian_k0_is_zero(capsys):
    code, out, _ = run(capsys, "laplacian", "-k", "0", "0.5", "--json")
    assert code == 0 and json.loads(out)["rows"][0]["laplacian"] == 0.0


def test_laplacian_guard_error_names_r2(capsys):
    code, _, err = run(capsys, "laplacian", "-k", "2", "0.9")
    assert code == 2 and "R_2" in err


def test_integrate_k1(capsys):
    code, out, _ = run(capsys, "integrate", "-k", "1", "--json")
    payload = json.loads(out)
    assert code == 0
    values = [row["value"] for row in payload["rows"]]
    assert values[0] == pytest.approx(2 * math.pi / math.log(10), abs=1e-8)
    assert values[1] == pytest.approx(2 * math.pi / 10, abs=1e-8)
    assert any("2 pi" in n for n in payload["notes"])


def test_flux_profile(capsys, tmp_path):
    code, out, _ = run(capsys, "flux", "--alpha", "1.5", "--ladder-count", "5", "--csv-dir", str(tmp_path), "--json")
    lad = json.loads(out)["flux_ladders"][0]
    assert code == 0
    assert all(abs(v - 3 * math.pi) < 1e-10 for v in lad["values"])
    rows = list(csv.reader(open(tmp_path / "flux_0.csv")))
    assert rows[0] == ["eps", "value", "error_estimate"] and len(rows) == 6


def test_verify_round_sphere_writes_report(capsys, workdir):
    code, _, _ = run(capsys, "verify", "--config", str(CONFIGS / "round_sphere.json"))
    assert code == 0
    report = json.loads((workdir / "out" / "round_sphere.json").read_text())
    for key in ("chi", "orders", "total_curvature_over_2pi", "l1_curvature", "defect", "flux_ladders",
                "quadrature_meta"):
        assert key in report
    assert abs(report["defect"]) < 1e-8


def test_verify_football(capsys, workdir):
    code, out, _ = run(capsys, "verify", "--config", str(CONFIGS / "football.json"), "--json")
    assert code == 0
    assert json.loads(out)["total_curvature_over_2pi"] == pytest.approx(1.0, abs=1e-9)


def test_verify_log_puncture_writes_csv(capsys, workdir):
    code, out, _ = run(capsys, "verify", "--config", str(CONFIGS / "log_puncture.json"), "--json")
    report = json.loads(out)
    assert code == 0
    assert len(report["refinement"]) == 4
    assert (workdir / "out" / "log_puncture_csv" / "flux_0.csv").exists()


def test_verify_overlapping_config_exits_2(capsys, workdir):
    code, _, err = run(capsys, "verify", "--config", str(CONFIGS / "overlapping.json"))
    assert code == 2 and "error" in err


def test_verify_missing_config_exits_2(capsys, workdir):
    code, _, _ = run(capsys, "verify", "--config", str(workdir / "missing.json"))
    assert code == 2


def test_verify_unconverged_exits_3(capsys, workdir):
    cfg = json.loads((CONFIGS / "log_puncture.json").read_text())
    cfg["quadrature"] = {"rel_tol": 1e-14, "abs_tol": 1e-16, "max_evaluations": 200}
    path = workdir / "tight.json"
    path.write_text(json.dumps(cfg))
    code, _, _ = run(capsys, "verify", "--config", str(path))
    assert code == 3


def test_verify_is_deterministic(capsys, workdir):
    outputs = []
    for _ in range(2):
        code, out, _ = run(capsys, "verify", "--config", str(CONFIGS / "punctured_torus.json"), "--json")
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]


def test_sks_command(capsys):
    code, out, _ = run(capsys, "sks", "--variant", "A", "--n", "0", "--json")
    s = json.loads(out)
    assert code == 0 and s["order"] == 0.5 and s["residual_max"] < 1e-9
    code, out, _ = run(capsys, "sks", "--variant", "B", "--a", "0.5", "--json")
    s = json.loads(out)
    assert code == 0 and s["order"] == 0.0 and s["residual_max"] < 1e-9
    code, out, _ = run(capsys, "sks", "--c", "0", "--json")
    assert code == 0 and json.loads(out)["residual_max"] == 0.0


def test_console_script_entry_point(workdir):
    exe = shutil.which("logbonnet")
    cmd = [exe] if exe else [sys.executable, "-m", "logbonnet.cli"]
    proc = subprocess.run(cmd + ["verify", "--config", str(CONFIGS / "flat_torus.json")],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and "PASS" in proc.stdout
