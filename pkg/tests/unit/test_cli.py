import json

import pytest
from click.testing import CliRunner

from cli import main

@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)

def test_help_lists_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("orbit", "verify-cnb", "spectrum", "verify-qnb", "report"):
        assert command in result.output

def test_orbit_zero_time_writes_single_row(runner, tmp_path):
    out = tmp_path / "orbit.csv"
    result = runner.invoke(main, ["orbit", "--z0", "1,0,0,1,0,0", "--rhs", "nambu", "--t-max", "0", "--out", str(out)])
    assert result.exit_code == 0, result.stderr
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("t,x,px")
    assert len(lines) == 2

def test_orbit_circular_nambu(runner, tmp_path):
    out = tmp_path / "orbit.csv"
    report = tmp_path / "orbit.json"
    result = runner.invoke(main, ["orbit", "--z0", "1,0,0,1,0,0", "--rhs", "nambu", "--t-max", "6.2832",
                                  "--out", str(out), "--report", str(report)])
    assert result.exit_code == 0, result.stderr
    payload = json.loads(report.read_text())
    assert payload["pass"] is True
    assert payload["suites"][0]["notes"]["closure"] < 1e-3

def test_orbit_zero_angular_momentum_is_usage_error(runner, tmp_path):
    result = runner.invoke(main, ["orbit", "--z0", "1,0,0,0,0,0", "--rhs", "nambu", "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == 2
    assert "ZeroAngularMomentum" in result.stderr

def test_orbit_rejects_malformed_state(runner):
    result = runner.invoke(main, ["orbit", "--z0", "1,0,0"])
    assert result.exit_code == 2
    assert "six numbers" in result.stderr

def test_verify_cnb_passes(runner):
    result = runner.invoke(main, ["verify-cnb", "--points", "10", "--seed", "42", "--tol", "1e-8", "--out", "-"])
    assert result.exit_code == 0, result.stderr
    payload = json.loads(result.stdout)
    assert payload["command"] == "verify-cnb"
    assert [s["test_name"] for s in payload["suites"]] == ["cnb_det_vs_pfaffian", "flow_equivalence"]
    assert all(s["seed"] == 42 for s in payload["suites"])

def test_verify_cnb_zero_points(runner):
    result = runner.invoke(main, ["verify-cnb", "--points", "0", "--out", "-"])
    assert result.exit_code == 0
    assert all(s["trials"] == 0 for s in json.loads(result.stdout)["suites"])

def test_verify_cnb_zero_tolerance_fails(runner):
    result = runner.invoke(main, ["verify-cnb", "--points", "5", "--tol", "0", "--out", "-"])
    assert result.exit_code == 1
    assert json.loads(result.stdout)["pass"] is False

def test_verify_cnb_reads_environment(runner):
    result = runner.invoke(main, ["verify-cnb", "--out", "-"], env={"NAMBUKEPLER_VERIFY_CNB_POINTS": "0"})
    assert result.exit_code == 0
    assert json.loads(result.stdout)["suites"][0]["trials"] == 0

def test_reports_are_reproducible(runner):
    args = ["verify-cnb", "--points", "5", "--seed", "9", "--out", "-"]
    first = json.loads(runner.invoke(main, args).stdout)
    second = json.loads(runner.invoke(main, args).stdout)
    first.pop("generated_at")
    second.pop("generated_at")
    assert first == second

def test_spectrum_table(runner):
    result = runner.invoke(main, ["spectrum", "--smax", "1", "--hbar", "1", "--out", "-"])
    assert result.exit_code == 0, result.stderr
    levels = json.loads(result.stdout)
    assert [(level["energy"], level["degeneracy"]) for level in levels] == [
        (pytest.approx(-1 / 2), 1), (pytest.approx(-1 / 8), 4), (pytest.approx(-1 / 18), 9)]

def test_spectrum_scales_with_hbar(runner):
    one = json.loads(runner.invoke(main, ["spectrum", "--smax", "2", "--out", "-"]).stdout)
    two = json.loads(runner.invoke(main, ["spectrum", "--smax", "2", "--hbar", "2", "--out", "-"]).stdout)
    assert [b["energy"] for b in two] == pytest.approx([a["energy"] / 4 for a in one])

def test_spectrum_rejects_bad_spin(runner):
    result = runner.invoke(main, ["spectrum", "--smax", "0.3", "--out", "-"])
    assert result.exit_code == 2

def test_verify_qnb_spin_half(runner):
    result = runner.invoke(main, ["verify-qnb", "--spins", "0.5", "--trials", "2", "--seed", "7", "--out", "-"])
    assert result.exit_code == 0, result.stderr
    payload = json.loads(result.stdout)
    assert payload["pass"] is True
    assert max(s["max_residual"] for s in payload["suites"]) < 1e-10
    assert any(s["convention_selected"] == "sum-over-6-orderings" for s in payload["suites"])

def test_verify_qnb_rejects_bad_spin(runner):
    result = runner.invoke(main, ["verify-qnb", "--spins", "0.3"])
    assert result.exit_code == 2
    assert "InvalidSpin" in result.stderr

def test_unwritable_output_is_usage_error(runner, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    result = runner.invoke(main, ["verify-cnb", "--points", "0", "--out", str(blocker / "report.json")])
    assert result.exit_code == 2
    assert "I/O error" in result.stderr

@pytest.mark.parametrize("args", [
    ["spectrum", "--smax", "inf", "--out", "-"],
    ["spectrum", "--smax", "1e400", "--out", "-"],
    ["verify-qnb", "--spins", "1e400", "--out", "-"],
    ["verify-qnb", "--spins", "0.5,inf", "--out", "-"],
])
def test_non_finite_spins_are_usage_errors(runner, args):
    result = runner.invoke(main, args)
    assert result.exit_code == 2, result.exception
    assert "InvalidSpin" in result.stderr
