"""Tests for tracks, validation metrics and scenarios."""

import math
from unittest.mock import patch

import numpy as np
import pytest

from config.schemas import ControllerConfig, RunConfig, ScenarioSpec
from config.settings import Settings
from gp_regression import build_model
from rhalc_controller import VehicleModels
from rhalc_controller.models import DEFAULT_KERNEL_A, DEFAULT_KERNEL_P
from track_scenarios import (
    GridBounds,
    Track,
    TrackFormatError,
    UnknownTrackError,
    ValidationGrid,
    available_tracks,
    compute_metrics,
    generate_initial_dataset,
    load_bundled_track,
    load_track,
    run_scenario,
    save_track,
    scenario_controller,
    validation_grid,
)


@pytest.fixture
def circle() -> Track:
    """Closed unit circle centered at (0, 1), driven counter-clockwise."""
    return Track.from_segments([0.0, 0.0], 0.0, [{"arc": 1.0, "angle": 2.0 * math.pi}], half_width=0.2, spacing=0.05)


@pytest.fixture
def small_grid() -> ValidationGrid:
    """Validation grid with three points per axis."""
    return validation_grid(points=3)


class TestTrackGeometry:
    """Test suite for centerline geometry."""

    def test_closing_point_is_dropped(self, circle):
        """Test the repeated first point of a closed loop is removed."""
        assert circle.centerline.shape == (126, 2)
        assert circle.length == pytest.approx(2.0 * math.pi, rel=1e-3)

    def test_tangents_at_vertices(self, circle):
        """Test vertex tangents follow the circle heading."""
        step = 2.0 * math.pi / 126
        for i, s in enumerate(circle.arc_lengths):
            expected = [math.cos(i * step), math.sin(i * step)]
            np.testing.assert_allclose(circle.tangent_at(s), expected, atol=1e-9)

    def test_point_at_wraps(self, circle):
        """Test arc lengths beyond one lap wrap around."""
        np.testing.assert_allclose(circle.point_at(circle.length + 0.3), circle.point_at(0.3), atol=1e-12)

    def test_projection(self, circle):
        """Test a point off the centerline projects to the matching arc length."""
        point = [1.1 * math.sin(1.0), 1.0 - 1.1 * math.cos(1.0)]
        assert circle.project(point) == pytest.approx(1.0, abs=1e-2)
        assert circle.project(point, s_hint=0.8) == pytest.approx(1.0, abs=1e-2)

    def test_contains_and_offset(self, circle):
        """Test membership and signed lateral offset."""
        assert circle.contains([0.0, 0.0])
        assert not circle.contains([0.0, 1.0])
        inside = [0.9 * math.sin(2.0), 1.0 - 0.9 * math.cos(2.0)]
        assert circle.lateral_offset(inside) == pytest.approx(0.1, abs=1e-3)

    def test_borders(self, circle):
        """Test the left border lies inside the loop and the right border outside."""
        left, right = circle.borders()
        center = np.array([0.0, 1.0])
        np.testing.assert_allclose(np.linalg.norm(left - center, axis=1), 0.8, atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(right - center, axis=1), 1.2, atol=1e-9)

    def test_open_track(self):
        """Test open tracks clamp arc lengths to their ends."""
        track = Track(centerline=np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), half_width=0.2, closed=False)
        assert track.length == pytest.approx(2.0)
        np.testing.assert_allclose(track.point_at(5.0), [1.0, 1.0])
        np.testing.assert_allclose(track.point_at(-1.0), [0.0, 0.0])
        assert track.heading_at(2.0) == pytest.approx(math.pi / 2)


class TestTrackErrors:
    """Test suite for malformed tracks."""

    @pytest.mark.parametrize(
        "centerline,half_width,closed",
        [
            (np.zeros((4, 3)), 0.5, True),
            (np.array([[0.0, 0.0], [1.0, 0.0]]), 0.5, True),
            (np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), 0.5, False),
            (np.array([[0.0, 0.0], [1.0, 0.0]]), 0.0, False),
            (np.array([[0.0, 0.0], [np.nan, 0.0]]), 0.5, False),
        ],
    )
    def test_invalid_tracks(self, centerline, half_width, closed):
        """Test invalid geometry raises TrackFormatError."""
        with pytest.raises(TrackFormatError):
            Track(centerline=centerline, half_width=half_width, closed=closed)

    def test_missing_field(self):
        """Test a document without half_width is rejected."""
        with pytest.raises(TrackFormatError):
            Track.from_dict({"centerline": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]})

    def test_unknown_segment(self):
        """Test unknown segment types are rejected."""
        with pytest.raises(TrackFormatError):
            Track.from_segments([0.0, 0.0], 0.0, [{"spiral": 1.0}], half_width=0.3)

    def test_bad_files(self, tmp_path):
        """Test broken JSON and non-object documents are rejected."""
        broken = tmp_path / "broken.json"
        broken.write_text("{", encoding="utf-8")
        listed = tmp_path / "listed.json"
        listed.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(TrackFormatError):
            load_track(broken)
        with pytest.raises(TrackFormatError):
            load_track(listed)

    def test_unknown_track_id(self):
        """Test an unknown identifier raises UnknownTrackError."""
        with pytest.raises(UnknownTrackError):
            load_bundled_track("does-not-exist")


class TestTrackFiles:
    """Test suite for track files."""

    def test_save_and_load(self, circle, tmp_path):
        """Test a saved track reloads with coordinates rounded to 6 decimals."""
        path = save_track(circle, tmp_path / "tracks" / "circle.json")
        loaded = load_track(path)
        np.testing.assert_allclose(loaded.centerline, circle.centerline, atol=1e-6)
        assert loaded.half_width == circle.half_width
        assert loaded.closed
        assert loaded.length == pytest.approx(circle.length, abs=1e-4)

    def test_bundled_tracks(self):
        """Test both bundled tracks load as closed loops."""
        assert {"oval", "complex"} <= set(available_tracks())
        oval = load_bundled_track("oval")
        complex_track = load_bundled_track("complex")
        assert oval.closed and complex_track.closed
        assert oval.half_width == 0.5
        assert complex_track.half_width == 0.4
        assert oval.contains(oval.point_at(0.0))

    def test_track_dir_takes_precedence(self, circle, tmp_path):
        """Test tracks in the configured directory are found first."""
        save_track(circle, tmp_path / "oval.json")
        with patch("track_scenarios.track.get_settings", return_value=Settings(track_dir=str(tmp_path))):
            track = load_bundled_track("oval")
        assert track.half_width == pytest.approx(0.2)


class TestMetrics:
    """Test suite for validation grids and metrics."""

    def test_grid_sizes(self, small_grid):
        """Test the grid has P^3 position rows and P^2 heading rows."""
        assert small_grid.X_p.shape == (27, 4)
        assert small_grid.truth_p.shape == (27, 2)
        assert small_grid.X_a.shape == (9, 2)
        assert small_grid.truth_a.shape == (9,)
        assert small_grid.spec()["points"] == 3

    def test_grid_truth_at_rest(self, small_grid):
        """Test zero-speed rows have zero increments."""
        at_rest = small_grid.X_p[:, 2] == 0.0
        assert at_rest.sum() == 9
        np.testing.assert_array_equal(small_grid.truth_p[at_rest], 0.0)

    def test_custom_bounds(self):
        """Test grid ranges follow the bounds."""
        grid = validation_grid(GridBounds(v=(0.5, 1.0)), points=2)
        assert sorted(set(grid.X_a[:, 0])) == [0.5, 1.0]

    def test_prior_metrics(self, small_grid):
        """Test a prior model scores the RMS and maximum of the truth."""
        report = compute_metrics(VehicleModels.prior(), small_grid, "prior")
        truth_dx = small_grid.truth_p[:, 0]
        assert report.rmse["dx"] == pytest.approx(np.sqrt(np.mean(truth_dx ** 2)), rel=1e-12)
        assert report.mae["dtheta"] == pytest.approx(np.max(np.abs(small_grid.truth_a)), rel=1e-12)
        assert report.to_dict()["model"] == "prior"
        assert set(report.to_dict()) == {"model", "rmse", "mae", "grid"}

    def test_model_trained_on_grid(self):
        """Test a model trained on the grid is far more accurate than the prior."""
        grid = validation_grid(points=4)
        models = VehicleModels(
            px=build_model(grid.X_p, grid.truth_p[:, 0], DEFAULT_KERNEL_P),
            py=build_model(grid.X_p, grid.truth_p[:, 1], DEFAULT_KERNEL_P),
            pa=build_model(grid.X_a, grid.truth_a, DEFAULT_KERNEL_A),
        )
        trained = compute_metrics(models, grid)
        prior = compute_metrics(VehicleModels.prior(), grid)
        for name in ("dx", "dy", "dtheta"):
            assert trained.rmse[name] < 0.1 * prior.rmse[name]

    def test_empty_grid(self):
        """Test an empty grid is rejected."""
        grid = ValidationGrid(np.zeros((0, 4)), np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), points=0)
        with pytest.raises(ValueError):
            compute_metrics(VehicleModels.prior(), grid)


class TestScenarios:
    """Test suite for experiment scenarios."""

    def test_initial_dataset(self, kernel_bounds):
        """Test the historical drive is seeded and starts at rest."""
        first = generate_initial_dataset(5, seed=2, kernel=kernel_bounds)
        second = generate_initial_dataset(5, seed=2, kernel=kernel_bounds)
        assert first.num_points == 5
        assert first.px.inputs[0, 2] == 0.0
        np.testing.assert_array_equal(first.px.inputs, second.px.inputs)
        assert first.px.kernel == second.px.kernel

    def test_single_point_dataset_is_not_fitted(self):
        """Test one observation keeps the default kernels."""
        models = generate_initial_dataset(1, seed=0)
        assert models.num_points == 1
        assert models.px.kernel == DEFAULT_KERNEL_P

    def test_scenario_controller(self):
        """Test offline design zeroes the tracking weights and online runs keep them."""
        base = ControllerConfig()
        offline = scenario_controller(ScenarioSpec(kind="offline_oed"), base)
        assert offline.gamma == 10.0
        assert offline.q_weights == (0.0, 0.0)
        assert offline.r_weights == (0.0, 0.0)
        online = scenario_controller(ScenarioSpec(kind="online_noal"), base)
        assert online.gamma == 0.0
        assert online.q_weights == base.q_weights

    def test_randomized_experiment(self, small_grid):
        """Test a short random-excitation scenario grows the dataset and reports metrics."""
        spec = ScenarioSpec(kind="randomized_experiment", initial_points=4, collection_steps=3)
        config = RunConfig.from_dict({"kernel": {"restarts": 1}, "controller": {"horizon": 3}})
        result = run_scenario(spec, seed=0, run_config=config, grid=small_grid)

        assert result.track is None
        assert result.models.num_points == 7
        assert result.episode.samples_collected == 3
        assert result.model_id == "randomized_experiment-seed0"
        assert result.metrics.model_id == result.model_id
        summary = result.summary()
        assert summary["scenario"] == "randomized_experiment"
        assert summary["kind"] == "randomized_experiment"
        assert summary["steps"] == 3

    def test_online_scenario_on_oval(self, small_run_config, small_grid):
        """Test an online learning scenario drives the oval."""
        spec = small_run_config.scenarios[0]
        result = run_scenario(spec, seed=1, run_config=small_run_config, grid=small_grid)
        assert result.track.name == "oval"
        assert 1 <= result.episode.steps <= 3
        assert result.episode.samples_collected == result.episode.steps
        assert result.models.num_points == 8 + result.episode.steps

    def test_racing_needs_models(self, small_grid):
        """Test the racing phase refuses to run without models."""
        with pytest.raises(ValueError):
            run_scenario(ScenarioSpec(kind="racing_phase"), seed=0, grid=small_grid)
