"""
Artifact writers for scenario runs.

Layout of one run directory::

    <out>/<scenario>/seed_<n>/
        trajectory.csv
        track_borders.csv      (track scenarios only)
        summary.json
        metrics.json
        scp_log.jsonl
        models/                (px.gp, py.gp, pa.gp, manifest.json)
"""

from pathlib import Path
from typing import Any, Dict, List, Union
import json
import logging

import pandas as pd

from config.schemas import OutputOptions
from rhalc_controller.models import save_models
from track_scenarios.metrics import MetricsReport
from track_scenarios.scenarios import ScenarioResult
from track_scenarios.track import Track

logger = logging.getLogger(__name__)


def run_directory(out_dir: Union[str, Path], scenario: str, seed: int) -> Path:
    return Path(out_dir) / scenario / f"seed_{seed}"


def write_json(path: Path, data: Any) -> Path:
    """Write a JSON document with stable formatting."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return path


def write_metrics(path: Path, report: MetricsReport) -> Path:
    return write_json(path, report.to_dict())


def write_track_borders(path: Path, track: Track) -> Path:
    """Centerline and both borders as columns of one CSV file."""
    left, right = track.borders()
    frame = pd.DataFrame(
        {
            "center_x": track.centerline[:, 0],
            "center_y": track.centerline[:, 1],
            "left_x": left[:, 0],
            "left_y": left[:, 1],
            "right_x": right[:, 0],
            "right_y": right[:, 1],
        }
    )
    frame.to_csv(path, index=False)
    return path


def write_scp_log(path: Path, result: ScenarioResult) -> int:
    """One JSON record per receding-horizon solve; returns the record count."""
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        if result.episode is not None:
            for diag in result.episode.diagnostics:
                if not diag.scp and not diag.fallback:
                    continue
                record = {"scenario": result.spec.name, "seed": result.seed, **diag.to_dict()}
                handle.write(json.dumps(record) + "\n")
                count += 1
    return count


def write_scenario_artifacts(
    result: ScenarioResult,
    out_dir: Union[str, Path],
    options: OutputOptions = OutputOptions(),
) -> Path:
    """
    Write every artifact of one scenario run.

    Args:
        result: Scenario outcome.
        out_dir: Root output directory.
        options: Artifact switches.

    Returns:
        The run directory.
    """
    directory = run_directory(out_dir, result.spec.name, result.seed)
    directory.mkdir(parents=True, exist_ok=True)

    if result.episode is not None:
        result.episode.to_frame(include_timing=options.timing_in_trajectory).to_csv(
            directory / "trajectory.csv", index=False
        )
    if result.track is not None:
        write_track_borders(directory / "track_borders.csv", result.track)
    write_json(directory / "summary.json", result.summary())
    write_metrics(directory / "metrics.json", result.metrics)
    records = write_scp_log(directory / "scp_log.jsonl", result)
    if options.write_models:
        save_models(result.models, directory / "models", result.model_id)

    logger.info(f"Wrote artifacts of {result.model_id} to {directory} ({records} solver records)")
    return directory


def metrics_table(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    """Flatten per-run rows (summary plus metrics) into one table sorted by scenario and seed."""
    flat = []
    for row in rows:
        entry = {"scenario": row["scenario"], "seed": row["seed"], "model": row["model"]}
        for kind in ("rmse", "mae"):
            for output, value in row["metrics"][kind].items():
                entry[f"{kind}_{output}"] = value
        for key in ("steps", "lap_complete", "crashed", "violations", "final_dataset_size"):
            if key in row:
                entry[key] = row[key]
        flat.append(entry)
    frame = pd.DataFrame(flat)
    if frame.empty:
        return frame
    return frame.sort_values(["scenario", "seed"], kind="stable").reset_index(drop=True)
