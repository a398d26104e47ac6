"""
End-to-end tests for the click commands: artifacts, exit codes and the run ledger
"""

import json

import pytest
from click.testing import CliRunner

from config.settings import Settings, settings
from main import cli

SCENARIO = {
    "horizon": 1.0,
    "steps": 8,
    "paths": 2000,
    "seed": 11,
    "generator": {"tag": "linear", "l1": 0.1, "l2": 0.2},
    "terminal": {"tag": "linear", "a": 1.0, "b": 0.0},
    "solver": {"tol": 1e-8, "max_iter": 40},
}


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, command, config_path, out, *extra):
    return runner.invoke(cli, [command, "--config", config_path, "--out", str(out), *extra])


def load_report(path):
    return json.loads(path.read_text(encoding="utf-8"))


class TestSolveCommands:

    def test_solve(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        result = invoke(runner, "solve", write_config(SCENARIO), out)
        assert result.exit_code == 0, result.output
        report = load_report(out / "solve_report.json")
        assert report["command"] == "solve"
        assert report["config"]["paths"] == 2000
        payload = report["payload"]
        assert payload["closed_form_y0"] == pytest.approx(0.2 * 1.1051709180756477)
        assert payload["solver"]["converged"]
        assert (out / "solve_slices.csv").read_text().startswith("t,meanY,stdY,mResidual")

    def test_risk(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        config = {**SCENARIO, "generator": {"tag": "kappa_abs_z", "kappa": 0.5}}
        result = invoke(runner, "risk", write_config(config), out)
        assert result.exit_code == 0, result.output
        payload = load_report(out / "risk_report.json")["payload"]
        assert payload["closed_form_rho0"] == pytest.approx(0.5)
        assert payload["rho0_mean"] == pytest.approx(0.5, abs=0.1)
        assert (out / "rho_curve.csv").exists()

    def test_convergence(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        config = {**SCENARIO, "convergence": {"kind": "solve", "steps_ladder": [4, 8], "paths_ladder": [1000]}}
        result = invoke(runner, "convergence", write_config(config), out)
        assert result.exit_code == 0, result.output
        rows = load_report(out / "convergence_report.json")["payload"]["rows"]
        assert [(row["ladder"], row["steps"], row["paths"]) for row in rows] == [
            ("steps", 4, 2000), ("steps", 8, 2000), ("paths", 8, 1000),
        ]

    def test_seed_override(self, runner, write_config, tmp_path):
        result = invoke(runner, "solve", write_config(SCENARIO), tmp_path / "out", "--seed", "99")
        assert result.exit_code == 0, result.output
        assert load_report(tmp_path / "out" / "solve_report.json")["config"]["seed"] == 99


class TestVolterraCommand:

    def test_bvie(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        config = {"steps": 64, "bvie": {"kernel": {"tag": "constant", "r": 1.0}, "c": 1.0}}
        result = invoke(runner, "bvie", write_config(config), out)
        assert result.exit_code == 0, result.output
        payload = load_report(out / "bvie_report.json")["payload"]
        assert payload["y_star0"] == pytest.approx(-2.718281828, abs=1e-3)
        assert payload["max_abs_error"] <= 1e-3
        assert (out / "bvie_table.csv").read_text().startswith("t,yStar,closedForm,absError")

    def test_bvie_without_closed_form(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        table = [[0.1] * 9 for _ in range(9)]
        config = {"steps": 8, "bvie": {"kernel": {"tag": "grid_table", "values": table}, "c": 1.0}}
        result = invoke(runner, "bvie", write_config(config), out)
        assert result.exit_code == 0, result.output
        assert load_report(out / "bvie_report.json")["payload"]["closed_form_y0"] is None

    def test_bvie_not_settling_exits_3(self, runner, write_config, tmp_path):
        config = {"steps": 4, "bvie": {"kernel": {"tag": "constant", "r": 50.0}, "c": 1.0, "max_iter": 20}}
        result = invoke(runner, "bvie", write_config(config), tmp_path / "out")
        assert result.exit_code == 3


class TestRiskExperiments:

    def test_axioms(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        result = invoke(runner, "axioms", write_config(SCENARIO), out, "--threads", "2")
        assert result.exit_code == 0, result.output
        report = load_report(out / "axioms_report.json")["payload"]
        assert [axiom["name"] for axiom in report["axioms"]] == [
            "past_independence", "monotonicity", "positive_homogeneity", "subadditivity", "translation",
        ]
        assert "worstViolation" in (out / "axioms_table.txt").read_text()

    def test_strict_failure_exits_4(self, runner, write_config, tmp_path):
        config = {**SCENARIO, "generator": {"tag": "quadratic", "scale": 1.0},
                  "axioms": {"axioms": ["positive_homogeneity"]}}
        path = write_config(config)
        assert invoke(runner, "axioms", path, tmp_path / "loose").exit_code == 0
        result = invoke(runner, "axioms", path, tmp_path / "strict", "--strict")
        assert result.exit_code == 4

    def test_counterexample(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        config = {"steps": 8, "paths": 4000, "seed": 5, "counterexample": {"c": 1.0}}
        result = invoke(runner, "counterexample", write_config(config), out)
        assert result.exit_code == 0, result.output
        payload = load_report(out / "counterexample_report.json")["payload"]
        assert payload["verdict"] == "non-deterministic"
        assert (out / "counterexample_slices.csv").exists()

    def test_counterexample_mean_field(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        config = {"steps": 8, "paths": 1000, "counterexample": {"c": 1.0, "mean_field": True}}
        assert invoke(runner, "counterexample", write_config(config), out).exit_code == 0
        assert load_report(out / "counterexample_report.json")["payload"]["verdict"] == "deterministic"


class TestExitCodes:

    def test_invalid_json(self, runner, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert invoke(runner, "solve", str(path), tmp_path / "out").exit_code == 2

    def test_invalid_config(self, runner, write_config, tmp_path):
        result = invoke(runner, "solve", write_config({**SCENARIO, "paths": 10}), tmp_path / "out")
        assert result.exit_code == 2
        assert "paths" in result.output

    def test_missing_block(self, runner, write_config, tmp_path):
        config = {key: value for key, value in SCENARIO.items() if key != "terminal"}
        assert invoke(runner, "solve", write_config(config), tmp_path / "out").exit_code == 2
        assert invoke(runner, "counterexample", write_config(SCENARIO), tmp_path / "out").exit_code == 2

    def test_l2_length_must_match_brownian_dim(self, runner, write_config, tmp_path):
        config = {**SCENARIO, "generator": {"tag": "linear", "l1": 0.1, "l2": [0.1, 0.2]}}
        result = invoke(runner, "solve", write_config(config), tmp_path / "out")
        assert result.exit_code == 2
        assert "generator.l2" in result.output
        assert "Traceback" not in result.output

    def test_terminal_vector_length_checked(self, runner, write_config, tmp_path):
        config = {**SCENARIO, "terminal": {"tag": "linear", "a": [1.0, 2.0, 3.0]}}
        result = invoke(runner, "risk", write_config(config), tmp_path / "out")
        assert result.exit_code == 2
        assert "terminal.a" in result.output

    def test_bvie_block_missing(self, runner, write_config, tmp_path):
        assert invoke(runner, "bvie", write_config(SCENARIO), tmp_path / "out").exit_code == 2


class TestReproducibility:

    def test_rerun_is_byte_identical(self, runner, write_config, tmp_path):
        path = write_config(SCENARIO)
        invoke(runner, "solve", path, tmp_path / "first")
        invoke(runner, "solve", path, tmp_path / "second")
        first = (tmp_path / "first" / "solve_slices.csv").read_bytes()
        assert first == (tmp_path / "second" / "solve_slices.csv").read_bytes()

    def test_thread_count_does_not_change_output(self, runner, write_config, tmp_path):
        path = write_config(SCENARIO)
        invoke(runner, "risk", path, tmp_path / "one", "--threads", "1")
        invoke(runner, "risk", path, tmp_path / "four", "--threads", "4")
        for name in ("rho_curve.csv", "risk_report.json"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()

    def test_memory_budget_does_not_change_axioms(self, runner, write_config, tmp_path, monkeypatch):
        assert Settings.model_fields["max_workers"].default == 1
        path = write_config({**SCENARIO, "axioms": {"axioms": ["monotonicity", "positive_homogeneity"]}})
        assert invoke(runner, "axioms", path, tmp_path / "default").exit_code == 0
        monkeypatch.setattr(settings, "memory_budget_mb", 1)
        result = invoke(runner, "axioms", path, tmp_path / "capped", "--threads", "4")
        assert result.exit_code == 0, result.output
        name = "axioms_report.json"
        assert (tmp_path / "default" / name).read_bytes() == (tmp_path / "capped" / name).read_bytes()


class TestHistory:

    def test_ledger_records_runs(self, runner, write_config, tmp_path):
        out = tmp_path / "out"
        path = write_config(SCENARIO)
        invoke(runner, "solve", path, out)
        invoke(runner, "solve", write_config({**SCENARIO, "paths": 10}, name="bad.json"), out)

        result = runner.invoke(cli, ["history", "--out", str(out)])
        assert result.exit_code == 0, result.output
        runs = [json.loads(line) for line in result.output.splitlines() if line.startswith("{")]
        assert [(run["command"], run["status"], run["exit_code"]) for run in runs] == [
            ("solve", "failed", 2), ("solve", "completed", 0),
        ]
        assert runs[1]["headline_value"] is not None

    def test_empty_history(self, runner, tmp_path):
        result = runner.invoke(cli, ["history", "--out", str(tmp_path / "empty")])
        assert result.exit_code == 0
        assert "No runs recorded" in result.output
