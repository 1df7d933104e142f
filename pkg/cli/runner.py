"""
Execute the scenarios of a run configuration for every seed.

Seeds are independent; with more than one worker each seed runs in its own
process.
"""

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union
import logging

from config.schemas import RunConfig, ScenarioKind
from rhalc_controller.models import load_models
from track_scenarios.metrics import validation_grid
from track_scenarios.scenarios import ScenarioResult, run_scenario
from vehicle_sim.models import VehicleParams
from cli.artifacts import metrics_table, write_scenario_artifacts

logger = logging.getLogger(__name__)


def run_seed(config: RunConfig, seed: int, out_dir: Optional[Union[str, Path]] = None) -> List[Dict[str, Any]]:
    """
    Run all scenarios of ``config`` in order for one seed.

    Racing scenarios take their models from an earlier scenario of the same
    seed (``models_from``) or from a saved directory (``models_path``).

    Returns:
        One row per scenario: the summary plus the metrics document.
    """
    grid = validation_grid(dt=config.controller.dt, params=VehicleParams.from_config(config.vehicle))
    results: Dict[str, ScenarioResult] = {}
    rows = []
    for spec in config.scenarios:
        models = None
        if spec.kind is ScenarioKind.RACING_PHASE:
            if spec.models_from is not None:
                models = results[spec.models_from].models
            else:
                models, model_id = load_models(spec.models_path)
                logger.info(f"Loaded models {model_id} from {spec.models_path}")

        result = run_scenario(spec, seed, run_config=config, models=models, grid=grid)
        results[spec.name] = result
        if out_dir is not None:
            write_scenario_artifacts(result, out_dir, config.output)
        rows.append({**result.summary(), "metrics": result.metrics.to_dict()})
    return rows


def run_all(
    config: RunConfig,
    seeds: Optional[Sequence[int]] = None,
    out_dir: Optional[Union[str, Path]] = None,
    workers: int = 1,
) -> List[Dict[str, Any]]:
    """
    Run every seed, optionally in parallel, and write the cross-seed metrics table.

    Args:
        config: Validated run configuration.
        seeds: Seeds to run (defaults to ``config.seeds``).
        out_dir: Artifact root; nothing is written when None.
        workers: Worker processes.

    Returns:
        Rows of all seeds, ordered by seed then scenario.
    """
    seeds = list(seeds) if seeds else list(config.seeds)
    logger.info(f"Running {len(config.scenarios)} scenarios for seeds {seeds} with {workers} workers")

    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(run_seed, config, seed, out_dir) for seed in seeds]
            per_seed = [future.result() for future in futures]
    else:
        per_seed = [run_seed(config, seed, out_dir) for seed in seeds]

    rows = [row for seed_rows in per_seed for row in seed_rows]
    if out_dir is not None and rows:
        path = Path(out_dir) / "metrics_table.csv"
        metrics_table(rows).to_csv(path, index=False)
        logger.info(f"Metrics table written to {path}")
    return rows
