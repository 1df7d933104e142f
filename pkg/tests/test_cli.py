"""Tests for the command-line interface, artifacts and numerical self-checks."""

import json
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest
import scipy.sparse as sp

from cli import (
    CheckReport,
    build_parser,
    central_difference,
    enumerate_box_qp,
    main,
    metrics_table,
    qp_checks,
    relative_error,
    run_seed,
)
from config.schemas import RunConfig
from qp_subproblem.models import QpProblem

SMALL_RUN = {
    "scenarios": [{"kind": "online_al", "name": "al", "initial_points": 8, "collection_steps": 3, "max_steps": 3}],
    "controller": {"horizon": 3},
    "scp": {"j_max": 10},
    "kernel": {"restarts": 1},
    "seeds": [0],
}


@pytest.fixture(scope="module")
def completed_run(tmp_path_factory):
    """A finished ``run`` command: (exit code, output root, config path)."""
    root = tmp_path_factory.mktemp("cli-run")
    config_path = root / "run.json"
    config_path.write_text(json.dumps(SMALL_RUN), encoding="utf-8")
    out_dir = root / "out"
    code = main(["run", "--config", str(config_path), "--out", str(out_dir)])
    return code, out_dir, config_path


class TestParser:
    """Test suite for argument parsing."""

    def test_repeated_seeds(self):
        """Test --seed may be given several times."""
        args = build_parser().parse_args(["run", "--seed", "1", "--seed", "4"])
        assert args.command == "run"
        assert args.seeds == [1, 4]

    def test_check_defaults(self):
        """Test the check commands default to 20 instances."""
        args = build_parser().parse_args(["qpcheck"])
        assert args.instances == 20
        assert args.seed == 0

    def test_metrics_requires_models(self):
        """Test the metrics command needs a models directory."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["metrics"])

    def test_command_required(self):
        """Test a subcommand is mandatory."""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestChecksCommands:
    """Test suite for gradcheck and qpcheck."""

    def test_gradcheck_passes(self, capsys):
        """Test the analytic derivatives pass the finite-difference check."""
        assert main(["gradcheck", "--instances", "2", "--seed", "5"]) == 0
        output = capsys.readouterr().out
        assert "Gradient checks" in output
        assert "FAIL" not in output

    def test_qpcheck_passes(self, capsys):
        """Test the QP solver matches the enumeration oracle."""
        assert main(["qpcheck", "--instances", "2"]) == 0
        assert "objective_gap" in capsys.readouterr().out

    def test_failed_check_exit_code(self, capsys):
        """Test a failing check exits with status 1."""
        failing = [CheckReport("entropy_gradient", 1, 0.5, 1e-4)]
        with patch("cli.main.gradient_checks", return_value=failing):
            assert main(["gradcheck"]) == 1
        assert "FAIL" in capsys.readouterr().out


class TestConfigErrors:
    """Test suite for malformed configurations."""

    def test_invalid_field(self, tmp_path, capsys):
        """Test a bad field exits with status 2 and names its location."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"controller": {"horizon": 0}}), encoding="utf-8")
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 2
        assert "controller.horizon: " in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_missing_file(self, tmp_path, capsys):
        """Test a missing configuration file exits with status 2."""
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2
        assert "configuration file not found" in capsys.readouterr().err

    def test_missing_models_directory(self, tmp_path, capsys):
        """Test metrics on a missing directory exits with status 2."""
        assert main(["metrics", "--models", str(tmp_path / "nope"), "--grid-points", "2"]) == 2
        assert "models directory not found" in capsys.readouterr().err


class TestRunCommand:
    """Test suite for the run and metrics commands."""

    def test_artifacts_written(self, completed_run):
        """Test a run writes every artifact of the scenario."""
        code, out_dir, _ = completed_run
        assert code == 0
        run_dir = out_dir / "al" / "seed_0"
        for name in ("trajectory.csv", "track_borders.csv", "summary.json", "metrics.json", "scp_log.jsonl"):
            assert (run_dir / name).is_file()
        assert (run_dir / "models" / "manifest.json").is_file()
        assert (out_dir / "metrics_table.csv").is_file()

    def test_trajectory_and_summary(self, completed_run):
        """Test the trajectory table agrees with the summary."""
        _, out_dir, _ = completed_run
        run_dir = out_dir / "al" / "seed_0"
        trajectory = pd.read_csv(run_dir / "trajectory.csv")
        summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
        assert list(trajectory.columns) == ["t", "x", "y", "theta", "v", "a", "alpha", "solve_ms", "violated"]
        assert len(trajectory) == summary["steps"]
        assert trajectory["solve_ms"].isna().all()
        assert summary["model"] == "al-seed0"
        assert summary["final_dataset_size"] == 8 + summary["steps"]

    def test_scp_log(self, completed_run):
        """Test every solver record names its scenario and step."""
        _, out_dir, _ = completed_run
        lines = (out_dir / "al" / "seed_0" / "scp_log.jsonl").read_text(encoding="utf-8").splitlines()
        records = [json.loads(line) for line in lines]
        assert records
        assert all(record["scenario"] == "al" and record["seed"] == 0 for record in records)
        assert [record["step"] for record in records] == sorted(record["step"] for record in records)

    def test_metrics_reproduces_stored_report(self, completed_run, tmp_path):
        """Test recomputed metrics of saved models are identical to the stored file."""
        _, out_dir, config_path = completed_run
        run_dir = out_dir / "al" / "seed_0"
        target = tmp_path / "metrics.json"
        code = main(["metrics", "--models", str(run_dir / "models"), "--config", str(config_path), "--out", str(target)])
        assert code == 0
        assert target.read_text(encoding="utf-8") == (run_dir / "metrics.json").read_text(encoding="utf-8")

    def test_metrics_of_several_model_sets(self, completed_run, capsys):
        """Test several model directories give a list of reports."""
        _, out_dir, _ = completed_run
        models = str(out_dir / "al" / "seed_0" / "models")
        assert main(["metrics", "--models", models, "--models", models, "--grid-points", "2"]) == 0
        documents = json.loads(capsys.readouterr().out)
        assert isinstance(documents, list) and len(documents) == 2
        assert documents[0]["model"] == "al-seed0"
        assert documents[0]["grid"]["points"] == 2

    def test_racing_from_saved_models(self, completed_run):
        """Test a racing scenario can start from a saved models directory."""
        _, out_dir, _ = completed_run
        models_dir = out_dir / "al" / "seed_0" / "models"
        config = RunConfig.from_dict(
            {
                "scenarios": [{"kind": "racing_phase", "models_path": str(models_dir), "max_steps": 2}],
                "controller": {"horizon": 3},
                "scp": {"j_max": 5},
            }
        )
        rows = run_seed(config, seed=0)
        stored = json.loads((out_dir / "al" / "seed_0" / "summary.json").read_text(encoding="utf-8"))
        assert len(rows) == 1
        assert rows[0]["model"] == "racing_phase-seed0"
        assert rows[0]["samples_collected"] == 0
        assert rows[0]["final_dataset_size"] == stored["final_dataset_size"]


class TestArtifacts:
    """Test suite for artifact helpers."""

    def test_metrics_table_sorted(self):
        """Test rows are flattened and sorted by scenario and seed."""
        metrics = {"rmse": {"dx": 0.1, "dy": 0.2, "dtheta": 0.3}, "mae": {"dx": 1.0, "dy": 2.0, "dtheta": 3.0}}
        rows = [
            {"scenario": "re", "seed": 1, "model": "re-seed1", "metrics": metrics, "steps": 5},
            {"scenario": "al", "seed": 2, "model": "al-seed2", "metrics": metrics, "steps": 5},
            {"scenario": "al", "seed": 0, "model": "al-seed0", "metrics": metrics, "steps": 5},
        ]
        table = metrics_table(rows)
        assert table["model"].tolist() == ["al-seed0", "al-seed2", "re-seed1"]
        assert table.loc[0, "rmse_dtheta"] == 0.3
        assert table.loc[0, "mae_dx"] == 1.0
        assert "steps" in table.columns

    def test_metrics_table_empty(self):
        """Test no rows give an empty table."""
        assert metrics_table([]).empty


class TestNumericalHelpers:
    """Test suite for the finite-difference and oracle helpers."""

    def test_central_difference(self):
        """Test the finite-difference Jacobian of a polynomial map."""
        jac = central_difference(lambda x: np.array([x[0] ** 2, x[0] * x[1]]), np.array([1.0, 2.0]))
        np.testing.assert_allclose(jac, [[2.0, 2.0], [0.0, 1.0]], atol=1e-8)

    def test_relative_error(self):
        """Test the relative error guards against zero norms."""
        assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
        assert relative_error(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 1.0

    def test_enumerate_box_qp(self):
        """Test the oracle clamps the unconstrained minimizer coordinate-wise for identity P."""
        problem = QpProblem(P=sp.identity(2, format="csc"), q=np.array([-3.0, 0.5]), lower=-np.ones(2), upper=np.ones(2))
        np.testing.assert_allclose(enumerate_box_qp(problem), [1.0, -0.5])

    def test_qp_checks_small(self):
        """Test the oracle comparison on small problems."""
        gap, unsolved = qp_checks(instances=3, seed=2, n=4)
        assert gap.passed
        assert unsolved.max_error == 0.0
        assert gap.to_dict()["passed"] is True
