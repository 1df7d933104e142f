"""
Command-line interface.

Subcommands:
    run        Execute the scenarios of a run configuration and write artifacts.
    metrics    Recompute validation metrics of saved model sets.
    gradcheck  Finite-difference checks of the analytic GP and entropy derivatives.
    qpcheck    Compare the QP solver with an exact box-QP oracle.

Exit codes: 0 on success, 1 if a check fails, 2 on a malformed configuration.
"""

from pathlib import Path
from typing import List, Optional, Sequence
import argparse
import json
import logging
import sys

from config.schemas import ConfigError, RunConfig
from config.settings import get_settings
from rhalc_controller.models import load_models
from track_scenarios.metrics import GRID_POINTS, compute_metrics, validation_grid
from vehicle_sim.models import VehicleParams
from cli.artifacts import write_json
from cli.checks import CheckReport, gradient_checks, qp_checks
from cli.runner import run_all

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhalc",
        description="Receding-horizon active learning and control for GP-modeled vehicle dynamics",
    )
    parser.add_argument("--log-level", default=None, help="Override RHALC_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run the scenarios of a configuration")
    run.add_argument("--config", type=Path, default=None, help="JSON run configuration (defaults reproduce the published setup)")
    run.add_argument("--seed", type=int, action="append", dest="seeds", help="Seed to run; repeatable")
    run.add_argument("--out", type=Path, default=None, help="Output directory")
    run.add_argument("--workers", type=int, default=None, help="Worker processes for seed-parallel runs")

    metrics = sub.add_parser("metrics", help="Recompute validation metrics of saved models")
    metrics.add_argument("--models", type=Path, action="append", required=True, help="Saved models directory; repeatable")
    metrics.add_argument("--out", type=Path, default=None, help="Write the report(s) to this JSON file")
    metrics.add_argument("--config", type=Path, default=None, help="Run configuration supplying dt and vehicle geometry")
    metrics.add_argument("--grid-points", type=int, default=GRID_POINTS, help="Points per grid axis")

    for name, help_text in (("gradcheck", "Finite-difference gradient checks"), ("qpcheck", "QP solver oracle checks")):
        check = sub.add_parser(name, help=help_text)
        check.add_argument("--instances", type=int, default=20, help="Random instances per check")
        check.add_argument("--seed", type=int, default=0, help="Seed of the random instances")

    return parser


def configure_logging(level: Optional[str] = None) -> None:
    settings = get_settings()
    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper(), logging.INFO),
        format=settings.log_format,
    )


def _load_config(path: Optional[Path]) -> RunConfig:
    return RunConfig.from_file(path) if path is not None else RunConfig()


def _print_checks(title: str, reports: List[CheckReport]) -> int:
    print("=" * 60)
    print(title)
    print("=" * 60)
    for report in reports:
        status = "PASS" if report.passed else "FAIL"
        print(f"  {report.name:<28} {report.max_error:10.3e}  (tol {report.tolerance:.0e})  {status}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    settings = get_settings()
    out_dir = args.out or Path(config.output_dir or settings.output_dir)
    workers = args.workers or settings.workers
    rows = run_all(config, seeds=args.seeds, out_dir=out_dir, workers=workers)

    print("=" * 60)
    print(f"Run complete: {len(rows)} scenario runs written to {out_dir}")
    print("=" * 60)
    for row in rows:
        rmse = row["metrics"]["rmse"]
        print(
            f"  {row['scenario']:<24} seed {row['seed']:<4} "
            f"RMSE dx={rmse['dx']:.4f} dy={rmse['dy']:.4f} dtheta={rmse['dtheta']:.4f}"
        )
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    grid = validation_grid(
        points=args.grid_points,
        dt=config.controller.dt,
        params=VehicleParams.from_config(config.vehicle),
    )
    documents = []
    for directory in args.models:
        if not directory.is_dir():
            raise ConfigError([(str(directory), "models directory not found")])
        models, model_id = load_models(directory)
        documents.append(compute_metrics(models, grid, model_id=model_id).to_dict())

    output = documents[0] if len(documents) == 1 else documents
    if args.out is not None:
        write_json(args.out, output)
        logger.info(f"Metrics written to {args.out}")
    print(json.dumps(output, indent=2))
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    return _print_checks("Gradient checks", gradient_checks(instances=args.instances, seed=args.seed))


def cmd_qpcheck(args: argparse.Namespace) -> int:
    return _print_checks("QP oracle checks", qp_checks(instances=args.instances, seed=args.seed))


COMMANDS = {
    "run": cmd_run,
    "metrics": cmd_metrics,
    "gradcheck": cmd_gradcheck,
    "qpcheck": cmd_qpcheck,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse ``argv`` and dispatch to a subcommand.

    Returns:
        Process exit code.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        for location, message in e.locations:
            print(f"{location}: {message}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
