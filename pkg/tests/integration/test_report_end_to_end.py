import json

import pytest
from click.testing import CliRunner

from cli import main

@pytest.mark.integration
def test_full_report(tmp_path):
    out = tmp_path / "report.json"
    result = CliRunner(mix_stderr=False).invoke(main, ["report", "--out", str(out)])
    payload = json.loads(out.read_text())
    failed = [s["test_name"] for s in payload["suites"] if not s["pass"]]
    assert failed == []
    assert result.exit_code == 0
    assert payload["schema"] == 1
    assert payload["command"] == "report"
    assert len(payload["suites"]) >= 6
    assert {"python", "numpy", "scipy", "click"} <= set(payload["toolchain"])

    names = [s["test_name"] for s in payload["suites"]]
    for expected in ("cnb_det_vs_pfaffian", "flow_equivalence", "circular_closure", "balmer_spectrum",
                     "qnb_full_vs_strings", "entwined_evolution", "symmetrized_evolution", "jordan_kurosh_round_trip"):
        assert expected in names

@pytest.mark.integration
def test_report_to_stdout():
    result = CliRunner(mix_stderr=False).invoke(main, ["report", "--out", "-", "--seed", "3"])
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout)["pass"] is True
