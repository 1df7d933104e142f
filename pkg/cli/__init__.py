"""Command-line entry point, run orchestration and artifact writers."""

from cli.main import main, build_parser
from cli.runner import run_all, run_seed
from cli.artifacts import write_scenario_artifacts, metrics_table
from cli.checks import (
    CheckReport,
    central_difference,
    enumerate_box_qp,
    gradient_checks,
    qp_checks,
    relative_error,
)

__all__ = [
    "main",
    "build_parser",
    "run_all",
    "run_seed",
    "write_scenario_artifacts",
    "metrics_table",
    "CheckReport",
    "central_difference",
    "enumerate_box_qp",
    "gradient_checks",
    "qp_checks",
    "relative_error",
]
