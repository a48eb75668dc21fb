import csv
import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "data" / "golden_report.json"


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "extparticle", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_bundled_scenarios_are_wellformed():
    names = sorted(p.name for p in (resources.files("extparticle") / "scenarios").iterdir()
                   if p.name.endswith(".json"))
    assert len(names) >= 10
    for name in names:
        data = json.loads((resources.files("extparticle") / "scenarios" / name).read_text())
        assert data["name"] == name[:-5]


def test_simulate_writes_trajectory_under_scenario_dir(tmp_path):
    proc = run_cli("simulate", "--config", "spin-2d", "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    traj = tmp_path / "spin-2d" / "trajectory.csv"
    assert traj.exists()
    with open(traj, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "j", "re_x", "im_x", "re_y", "im_y"]
    report = json.loads((tmp_path / "spin-2d" / "report.json").read_text())
    assert report["passed"] is True


def test_simulate_is_bit_deterministic(tmp_path):
    run_cli("simulate", "--config", "spin-2d", "--out", str(tmp_path / "a"))
    run_cli("simulate", "--config", "spin-2d", "--out", str(tmp_path / "b"))
    one = (tmp_path / "a" / "spin-2d" / "trajectory.csv").read_bytes()
    two = (tmp_path / "b" / "spin-2d" / "trajectory.csv").read_bytes()
    assert one == two


def test_observables_verb_emits_pass_lines(tmp_path):
    proc = run_cli("observables", "--config", "spin-2d", "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.count("[PASS]") == 2
    payload = json.loads((tmp_path / "spin-2d" / "observables.json").read_text())
    assert payload["spin_intrinsic"] == pytest.approx(-0.5)


def test_orientation_override_flips_spin(tmp_path):
    proc = run_cli("observables", "--config", "spin-2d", "--orientation", "-",
                   "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((tmp_path / "spin-2d" / "observables.json").read_text())
    assert payload["spin_intrinsic"] == pytest.approx(0.5)


def test_seedless_flag_is_accepted(tmp_path):
    proc = run_cli("observables", "--config", "moments-1d", "--seedless",
                   "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr


def test_report_schema_matches_golden(tmp_path):
    proc = run_cli("verify", "--config", "compton-electron", "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    report = json.loads((tmp_path / "compton-electron" / "report.json").read_text())
    for check in report["checks"]:
        assert check["wall_time_s"] >= 0.0
        check["wall_time_s"] = 0.0
    golden = json.loads(GOLDEN.read_text())
    assert report == golden


def test_parse_error_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    proc = run_cli("simulate", "--config", str(bad), "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "config parse error" in proc.stderr


def test_validation_error_exits_2(tmp_path):
    bad = tmp_path / "bad_dim.json"
    bad.write_text(json.dumps({"name": "bad-dim", "model": {
        "dimension": 3, "z0": [[0.0, 0.0]], "steps": 8}}))
    proc = run_cli("simulate", "--config", str(bad), "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "config validation error" in proc.stderr
    assert "parse error" not in proc.stderr


def test_unknown_scenario_exits_2(tmp_path):
    proc = run_cli("simulate", "--config", "no-such-thing", "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "config validation error" in proc.stderr


def test_degenerate_sweep_exits_2(tmp_path):
    cfg = tmp_path / "short.json"
    scenario = json.loads((resources.files("extparticle") / "scenarios"
                           / "convergence-process.json").read_text())
    scenario["sweeps"] = [0.01, 0.001]
    cfg.write_text(json.dumps(scenario))
    proc = run_cli("converge", "--config", str(cfg), "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "at least 3" in proc.stderr


def test_failing_check_exits_1(tmp_path):
    cfg = tmp_path / "coarse.json"
    cfg.write_text(json.dumps({
        "name": "coarse",
        "physics": {"epsilon": 0.001},
        "field": {"axes": [[-40.0, 40.0, 64]],
                  "initial": {"kind": "gaussian", "sigma0": 1.0, "center": [-2.0], "k0": [1.0]},
                  "potential": {"kind": "free"}, "dt": 0.0036, "steps": 1000}}))
    proc = run_cli("field", "--config", str(cfg), "--out", str(tmp_path))
    assert proc.returncode == 1
    assert "[FAIL]" in proc.stdout
    report = json.loads((tmp_path / "coarse" / "report.json").read_text())
    assert report["passed"] is False


def test_converge_process_target(tmp_path):
    cfg = tmp_path / "quick.json"
    scenario = json.loads((resources.files("extparticle") / "scenarios"
                           / "convergence-process.json").read_text())
    scenario["sweeps"] = [0.01, 0.001, 0.0001]
    cfg.write_text(json.dumps(scenario))
    proc = run_cli("converge", "--config", str(cfg), "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    with open(tmp_path / "convergence-process" / "convergence.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["epsilon", "error"]
    assert len(rows) == 4


def test_field_verb_outputs_and_epsilon_override(tmp_path):
    proc = run_cli("field", "--config", "free-gaussian-field", "--epsilon", "0.005",
                   "--out", str(tmp_path))
    assert proc.returncode == 0, proc.stderr
    outdir = tmp_path / "free-gaussian-field"
    assert (outdir / "field_final.csv").exists()
    assert (outdir / "field_final.wvf").exists()


def test_missing_config_for_simulate_exits_2(tmp_path):
    proc = run_cli("simulate", "--out", str(tmp_path))
    assert proc.returncode == 2
    assert "requires --config" in proc.stderr
