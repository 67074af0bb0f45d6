import json
import subprocess
import sys
from pathlib import Path

import pytest

from exsphere import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_round_sphere_all_passes(capsys):
    code, out, _ = run(capsys, "verify", "round_sphere", "n=3", "--suite", "all", "--format", "json")
    assert code == cli.EXIT_PASS
    rep = cli.VerificationReport.from_json(out)
    assert rep.passed and rep.rows
    groups = {r.identity for r in rep.rows}
    assert {"gauss", "codazzi", "einstein_lambda", "i", "iv", "d_gamma", "cone_parallel"} <= groups
    assert all(r.passed == (r.max <= r.tolerance) for r in rep.rows)


def test_flat_torus_killing_is_degenerate(capsys):
    code, out, err = run(capsys, "verify", "flat_torus", "--suite", "killing")
    assert code == cli.EXIT_DEGENERATE
    assert "degenerate: no umbilical canonical embedding" in err
    assert "status: degenerate" in out


def test_cone_suite_on_sasakian_cone(capsys):
    code, out, _ = run(capsys, "verify", "cone(sasakian_sphere n=3)", "--suite", "cone", "--samples", "8",
                       "--format", "json")
    assert code == cli.EXIT_PASS
    rep = json.loads(out)
    assert rep["statuses"]["lift(contact)"] == "parallel on the cone"
    assert rep["environment"]["overrides"] == {"samples": 8}


def test_tolerance_override_forces_failure(capsys):
    code, out, _ = run(capsys, "verify", "round_sphere", "n=3", "--suite", "fundamental", "--tolerance", "1e-30",
                       "--samples", "5", "--format", "json")
    assert code == cli.EXIT_FAIL
    rep = json.loads(out)
    assert rep["status"] == "fail" and rep["environment"]["overrides"]["tolerance"] == 1e-30


@pytest.mark.parametrize("argv", [
    ("verify", "hyperbolic_space"),
    ("verify", "euclidean", "n=11"),
    ("verify", "round_sphere", "--suite", "nope"),
    ("verify", "round_sphere", "--samples", "0"),
    ("verify", "round_sphere", "--tolerance", "-1"),
    ("search", "/nonexistent/config.json"),
    ("frobnicate",),
])
def test_input_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == cli.EXIT_INPUT


def test_bad_search_config(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"family": "s3-in-r4", "param_dim": 8, "budget": 10}))
    code, _, err = run(capsys, "search", str(path))
    assert code == cli.EXIT_INPUT and "budget" in err


def test_spec_file_with_unknown_tolerance_id(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"name": "round_sphere", "params": {"n": 2}, "tolerance_overrides": {"bogus": 1.0}}))
    code, _, err = run(capsys, "verify", str(path))
    assert code == cli.EXIT_INPUT and "bogus" in err


def test_spec_file_orientation_flip(capsys, tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"name": "round_sphere", "params": {"n": 3}, "orientation": -1, "sample_count": 5}))
    code, out, _ = run(capsys, "verify", str(path), "--suite", "killing", "--format", "json")
    assert code == cli.EXIT_PASS
    assert json.loads(out)["environment"]["samples"] == 5


def test_report_round_trip_is_lossless(capsys):
    _, out, _ = run(capsys, "verify", "euclidean", "n=3", "--suite", "killing", "--samples", "4", "--format", "json")
    rep = cli.VerificationReport.from_json(out)
    assert rep.to_json() == out


def test_reports_are_byte_identical(capsys):
    a = run(capsys, "verify", "sasakian_sphere", "--samples", "4", "--format", "json")[1]
    b = run(capsys, "verify", "sasakian_sphere", "--samples", "4", "--format", "json")[1]
    assert a == b


def test_out_writes_json_and_markdown(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", "euclidean", "n=3", "--suite", "fundamental", "--samples", "4",
                       "--out", str(target))
    assert code == 0
    assert json.loads(target.read_text())["suite"] == "fundamental"
    md = target.with_suffix(".md").read_text()
    assert md == out and "| Gauss equation |" in md


def test_list_zoo(capsys):
    code, out, _ = run(capsys, "list-zoo", "--format", "json")
    entries = json.loads(out)["entries"]
    assert code == 0
    assert entries["cone"]["composite"] and entries["round_sphere"]["dim"] == 4
    assert "kahler" in entries["fubini_study_cp2"]["parallel_forms"]


def test_holonomy_euclidean(capsys):
    code, out, _ = run(capsys, "holonomy", "euclidean", "n=3", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["estimate"]["estimated_algebra_dimension"] == 0


def test_search_writes_report(capsys, tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"family": "s3-in-r4", "param_dim": 8, "budget": 120, "seed": 1}))
    target = tmp_path / "res.json"
    code, out, _ = run(capsys, "search", str(cfg), "--out", str(target))
    d = json.loads(target.read_text())
    assert code == 0 and d["verdict"] in ("converged_to_umbilical", "stalled_above_floor")
    assert d["best_objective"] == min(d["trace"]) and d["config"]["seed"] == 1
    assert "| verdict |" in out


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "exsphere.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip()


CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_equator_config_finds_totally_geodesic(capsys):
    code, out, _ = run(capsys, "search", str(CONFIGS / "equator-in-s4.json"), "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["verdict"] == "converged_to_umbilical" and d["lambda_max_abs"] < 1e-4


def test_cp2_config_is_exploratory(capsys):
    code, out, _ = run(capsys, "search", str(CONFIGS / "cp2-probe.json"))
    assert code == 0 and "(exploratory)" in out and "| floor |" in out
