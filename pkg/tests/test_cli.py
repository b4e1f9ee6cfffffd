import csv
import io
import json

import numpy as np
import pytest

from bandedge.cli import main
from bandedge.model import preset_model, save_model
from bandedge.pipeline import RunConfig, VerifyConfig, run_pipeline


def run_cli(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr().out
    return status, out


def test_validate_anderson(capsys):
    status, out = run_cli(capsys, "validate", "--model", "anderson")
    assert status == 0
    payload = json.loads(out)
    assert payload["passed"] is True


def test_validate_exit_status_on_failure(tmp_path, capsys):
    hopping, potential, disorder = preset_model("anderson")
    import bandedge.model as model

    bad = model.SingleCellPotential(np.zeros((1, 1)))
    path = tmp_path / "bad.json"
    save_model(path, hopping, bad, disorder)
    status, out = run_cli(capsys, "validate", "--model", str(path))
    assert status == 1


def test_floquet_scan_csv(capsys):
    status, out = run_cli(capsys, "floquet-scan", "--model", "dipole")
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert float(rows[0]["theta_0"]) == 0.0
    assert float(rows[0]["gap"]) == 4.0


def test_fiber_json(capsys):
    status, out = run_cli(capsys, "fiber", "--model", "dipole", "--theta", "0")
    assert status == 0
    payload = json.loads(out)
    assert payload["eigenvalues"] == [0.0, 4.0]


def test_coefficients_json(capsys):
    status, out = run_cli(capsys, "coefficients", "--model", "anderson", "--eps", "0.01")
    assert status == 0
    payload = json.loads(out)
    assert payload["A1"] == pytest.approx(-1.0, abs=1e-12)
    assert payload["case"] == "Linear"
    assert payload["bound"]["0.01"] == pytest.approx(-0.01)
    assert {"theta", "p", "P", "A1", "A2", "A1_prime", "A2_prime", "case", "nondegenerate"} <= set(
        payload
    )


def test_verify_fiber_sweep(capsys):
    status, out = run_cli(
        capsys, "verify", "fiber-sweep", "--model", "anderson", "--eps", "0.001,0.01,0.1"
    )
    assert status == 0
    assert '"passed": true' in out


def test_verify_montecarlo(capsys):
    status, out = run_cli(
        capsys,
        "verify",
        "montecarlo",
        "--model",
        "anderson",
        "--eps",
        "0.01,0.03,0.1",
        "--L",
        "16",
        "--samples",
        "5",
        "--seed",
        "7",
    )
    assert status == 0
    lines = out.strip().splitlines()
    assert lines[0] == "epsilon,seed,lambda_min"
    summary = json.loads("\n".join(lines[16:]))
    assert "eta" in summary or "fit_error" in summary


def test_verify_quartic_reports_red(capsys):
    status, out = run_cli(capsys, "verify", "quartic", "--xi", "0.3", "--eps", "0.01")
    # the trial-state inequality does not hold; the command reports that honestly
    assert status == 1
    assert '"all_satisfied": false' in out


def test_verify_kirsch_simon(capsys):
    status, out = run_cli(
        capsys, "verify", "kirsch-simon", "--model", "alloy", "--N", "2", "--W", "0,1"
    )
    assert status == 0
    payload = json.loads(out)
    assert payload["passed"] is True
    assert payload["variant"] == "folded"


def test_run_pipeline_anderson(capsys):
    status, out = run_cli(capsys, "run", "--model", "anderson", "--eps", "0.01,0.1")
    assert status == 0
    payload = json.loads(out)
    assert payload["coefficients"]["best"]["A1"] == pytest.approx(-1.0)
    assert payload["fiber_sweep"]["passed"] is True
    assert payload["config"]["model"] == "anderson"


def test_run_report_embeds_resolved_config(tmp_path):
    config = RunConfig(
        model="dipole",
        epsilon_list=(0.01,),
        verify=VerifyConfig(L=8, samples=3, seed=5),
    )
    status, report = run_pipeline(config)
    assert status == 0
    assert report["config"]["tolerances"]["tol_shift"] == 1e-9
    assert report["config"]["verify"]["seed"] == 5
    assert "montecarlo" in report


def test_run_deterministic_reports():
    config = RunConfig(
        model="dipole", epsilon_list=(0.05,), verify=VerifyConfig(L=8, samples=4, seed=11)
    )
    _, a = run_pipeline(config)
    _, b = run_pipeline(config)
    assert json.dumps(a, default=str) == json.dumps(b, default=str)


def test_verify_config_requires_seed():
    with pytest.raises(ValueError):
        VerifyConfig(samples=3, seed=None)


def test_model_file_round_trip_through_cli(tmp_path, capsys):
    hopping, potential, disorder = preset_model("dipole")
    path = tmp_path / "dipole.json"
    save_model(path, hopping, potential, disorder)
    status, out = run_cli(capsys, "coefficients", "--model", str(path))
    assert status == 0
    assert json.loads(out)["A2"] == pytest.approx(-0.25, abs=1e-10)
