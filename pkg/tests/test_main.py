import json

import pandas as pd
import pytest
from typer.testing import CliRunner

import main
from capacity_engine import SolverError
from main import EXIT_DOMAIN, EXIT_OK, RunConfig, app, run

runner = CliRunner()


def last_line(result):
    return result.stdout.strip().splitlines()[-1]


def test_capacity_perfect_channel():
    result = runner.invoke(app, ["capacity", "--tau", "1", "--m-env", "0", "--omega-env", "1", "--n-bar", "1"])
    assert result.exit_code == 0, result.stdout
    assert "AboveThreshold" in result.stdout
    assert any(line.startswith("capacity_bits") and line.endswith(": 2.0") for line in result.stdout.splitlines())


def test_capacity_json():
    result = runner.invoke(app, ["capacity", "--tau", "1", "--y", "0.1", "--omega-env", "0.2", "--format", "json"])
    assert result.exit_code == 0, result.stdout
    payload = json.loads(result.stdout)
    assert payload["solution"]["regime"] == "BelowThreshold"
    assert payload["metadata"]["config"]["omega_env"] == 0.2


def test_sweep_writes_csv(tmp_path):
    output = tmp_path / "sweep.csv"
    result = runner.invoke(
        app,
        ["sweep", "--param", "omega-env", "--lo", "0.01", "--hi", "1", "--steps", "50",
         "--tau", "-1", "--m-env", "0.1", "--n-bar", "1", "--output", str(output), "--threads", "2"],
    )
    assert result.exit_code == 0, result.stdout
    assert last_line(result) == str(output)
    frame = pd.read_csv(output)
    assert len(frame) == 50
    assert (frame["status"] == "ok").all()
    assert frame["omega_thr"].iloc[0] == pytest.approx(0.59, abs=5e-3)


def test_classify_saddle():
    result = runner.invoke(app, ["classify", "--tau", "0.3759", "--m-env", "0.001", "--n-bar", "0.1", "--format", "json"])
    assert result.exit_code == 0, result.stdout
    record = json.loads(result.stdout)
    assert record["scenario"] == "Saddle"
    assert [e["kind"] for e in record["extrema"]] == ["Saddle"]


def test_zones_json(tmp_path):
    output = tmp_path / "zones.json"
    result = runner.invoke(
        app,
        ["zones", "--steps", "3", "--tau-lo", "-1", "--tau-hi", "1", "--y-lo", "0", "--y-hi", "1",
         "--format", "json", "--output", str(output), "--threads", "1"],
    )
    assert result.exit_code == 0, result.stdout
    payload = json.loads(output.read_text())
    assert len(payload["rows"]) == 9
    assert payload["metadata"]["config"]["command"] == "zones"


def test_unphysical_channel_exit_code():
    result = runner.invoke(app, ["capacity", "--tau", "0.5", "--y", "0.1"])
    assert result.exit_code == EXIT_DOMAIN
    assert "y >= |1-tau|/2" in result.output


def test_noise_given_twice():
    result = runner.invoke(app, ["capacity", "--tau", "0.5", "--y", "0.4", "--m-env", "0.1"])
    assert result.exit_code == EXIT_DOMAIN
    assert "exactly one of --m-env and --y" in result.output


def test_solver_failure_exit_code(monkeypatch):
    def failing(*args, **kwargs):
        raise SolverError("no sign change of the below-threshold residual", {"points": 64})

    monkeypatch.setattr(main, "capacity", failing)
    result = runner.invoke(app, ["capacity", "--tau", "1", "--y", "0.1", "--omega-env", "0.2"])
    assert result.exit_code == 3
    assert "points=64" in result.output


@pytest.mark.parametrize(
    "config",
    [
        RunConfig("sweep", tau=1.0, m_env=0.1, param="omega-env", lo=0.1),
        RunConfig("sweep", tau=1.0, m_env=0.1, param="gain", lo=0.1, hi=1.0),
        RunConfig("classify", tau=1.0, y=0.1, param="tau"),
        RunConfig("plot", tau=1.0, y=0.1),
        RunConfig("verify", resolution=10),
    ],
)
def test_invalid_configs(config):
    assert run(config) == EXIT_DOMAIN


def test_sweep_over_noise_needs_no_fixed_noise(tmp_path):
    config = RunConfig("sweep", tau=0.5, param="m-env", lo=0.0, hi=1.0, steps=5, output=str(tmp_path / "m.csv"))
    assert run(config) == EXIT_OK
    frame = pd.read_csv(tmp_path / "m.csv")
    assert frame.columns[0] == "m_env"
    assert frame["y"].iloc[-1] == pytest.approx(0.75)


def test_sweep_accepts_solver_flags(tmp_path):
    output = tmp_path / "sweep.json"
    result = runner.invoke(
        app,
        ["sweep", "--param", "n-bar", "--lo", "0.5", "--hi", "3", "--steps", "6", "--tau", "1", "--y", "0.1",
         "--omega-env", "0.2", "--abs-tol", "1e-10", "--max-iter", "100", "--bracket-grid", "32",
         "--format", "json", "--output", str(output), "--threads", "1"],
    )
    assert result.exit_code == 0, result.stdout
    payload = json.loads(output.read_text())
    assert payload["metadata"]["config"]["bracket_grid"] == 32
    assert payload["metadata"]["config"]["abs_tol"] == 1e-10
    assert all(row["status"] == "ok" for row in payload["rows"])


def test_sweep_rejects_bad_solver_flag():
    result = runner.invoke(
        app,
        ["sweep", "--param", "n-bar", "--lo", "0.5", "--hi", "3", "--tau", "1", "--y", "0.1", "--bracket-grid", "1"],
    )
    assert result.exit_code == EXIT_DOMAIN
    assert "bracket_grid" in result.output
