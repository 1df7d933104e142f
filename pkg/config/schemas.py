"""
Pydantic schemas for run configuration.

Every section defaults to the published racing-car experiment values, so an
empty document reproduces that setup. Invariants are enforced by validators
and surface as ConfigError with location-tagged messages.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union
import json
import math

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator


class ConfigError(ValueError):
    """
    Raised when a run configuration is malformed.

    Attributes:
        locations: One ``(location, message)`` pair per problem found.
    """

    def __init__(self, locations: List[Tuple[str, str]]):
        self.locations = locations
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in locations))

    @classmethod
    def from_validation_error(cls, error: ValidationError) -> "ConfigError":
        """Convert a pydantic ValidationError, keeping the field locations."""
        return cls(
            [
                (".".join(str(part) for part in err["loc"]) or "<root>", err["msg"])
                for err in error.errors()
            ]
        )


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


def _ordered_pair(value: Tuple[float, float]) -> Tuple[float, float]:
    if not value[0] < value[1]:
        raise ValueError(f"lower bound {value[0]} must be below upper bound {value[1]}")
    return value


class KernelBounds(_Frozen):
    """Box on the SE-ARD hyperparameters used while fitting."""

    lengthscale: Tuple[float, float] = (1e-3, 1e3)
    signal_std: Tuple[float, float] = (1e-4, 1e2)
    noise_std: Tuple[float, float] = (1e-6, 1e1)
    restarts: int = Field(default=3, ge=0)

    @field_validator("lengthscale", "signal_std", "noise_std")
    @classmethod
    def _check_pair(cls, value):
        if value[0] <= 0:
            raise ValueError("bounds must be strictly positive")
        return _ordered_pair(value)


class ScpConfig(_Frozen):
    """Trust-region parameters of the successive convex programming loop."""

    rho0: float = Field(default=0.1, gt=0)
    r0: float = 0.01
    r1: float = 0.1
    r2: float = 0.3
    beta_fail: float = Field(default=0.5, gt=0)
    beta_succ: float = 2.0
    epsilon: float = Field(default=1e-4, gt=0)
    j_max: int = Field(default=100, ge=1)

    @model_validator(mode="after")
    def _check_thresholds(self) -> "ScpConfig":
        if not 0 < self.r0 < self.r1 < self.r2 < 1:
            raise ValueError("thresholds must satisfy 0 < r0 < r1 < r2 < 1")
        if not self.beta_fail < 1 < self.beta_succ:
            raise ValueError("factors must satisfy beta_fail < 1 < beta_succ")
        return self


class PenaltyWeights(_Frozen):
    """Exact penalty weights: tau for inequalities, lam for equalities."""

    tau: float = Field(default=1e6, gt=0)
    lam: float = Field(default=1e6, gt=0)


class QpConfig(_Frozen):
    """ADMM solver tolerances."""

    primal_tol: float = Field(default=1e-6, gt=0)
    dual_tol: float = Field(default=1e-6, gt=0)
    complementarity_tol: float = Field(default=1e-6, gt=0)
    max_iter: int = Field(default=4000, ge=1)


class ControllerConfig(_Frozen):
    """Receding-horizon controller weights, bounds and learning cadence."""

    q_weights: Tuple[float, float] = (1e2, 1e2)
    r_weights: Tuple[float, float] = (1e-1, 1e-1)
    gamma: float = Field(default=10.0, ge=0)
    v_min: float = 0.0
    v_max: float = 2.0
    a_min: float = -2.0
    a_max: float = 2.0
    steer_min: float = -math.pi / 4
    steer_max: float = math.pi / 4
    horizon: int = Field(default=5, ge=1)
    dt: float = Field(default=0.2, gt=0)
    retrain_every: int = Field(default=1, ge=1)
    refit_every: int = Field(default=10, ge=1)
    target_speed: float = Field(default=1.5, ge=0)
    corridor_margin: float = Field(default=0.05, ge=0)
    penalties: PenaltyWeights = PenaltyWeights()
    qp: QpConfig = QpConfig()

    @field_validator("q_weights", "r_weights")
    @classmethod
    def _check_weights(cls, value):
        if any(w < 0 for w in value):
            raise ValueError("weight matrices must be PSD (non-negative diagonal)")
        return value

    @model_validator(mode="after")
    def _check_bounds(self) -> "ControllerConfig":
        for name in ("v", "a", "steer"):
            _ordered_pair((getattr(self, f"{name}_min"), getattr(self, f"{name}_max")))
        if not (-math.pi / 2 < self.steer_min and self.steer_max < math.pi / 2):
            raise ValueError("steering bounds must lie inside (-pi/2, pi/2)")
        return self


class VehicleConfig(_Frozen):
    """Truth-simulator geometry and per-step observation noise."""

    l_f: float = Field(default=0.205, gt=0)
    l_r: float = Field(default=0.386, gt=0)
    noise_std: Tuple[float, float, float] = (0.005, 0.005, 0.002)


class FreeSpaceBounds(_Frozen):
    """Axis-aligned experiment area for offline scenarios (meters)."""

    x_min: float = -10.0
    x_max: float = 10.0
    y_min: float = -10.0
    y_max: float = 10.0

    @model_validator(mode="after")
    def _check_box(self) -> "FreeSpaceBounds":
        _ordered_pair((self.x_min, self.x_max))
        _ordered_pair((self.y_min, self.y_max))
        return self


class ScenarioKind(str, Enum):
    """Experiment types."""

    OFFLINE_OED = "offline_oed"
    RANDOMIZED_EXPERIMENT = "randomized_experiment"
    ONLINE_AL = "online_al"
    ONLINE_NOAL = "online_noal"
    RACING_PHASE = "racing_phase"

    @property
    def is_offline(self) -> bool:
        return self in (ScenarioKind.OFFLINE_OED, ScenarioKind.RANDOMIZED_EXPERIMENT)

    @property
    def is_online(self) -> bool:
        return self in (ScenarioKind.ONLINE_AL, ScenarioKind.ONLINE_NOAL)


KIND_DEFAULTS: Dict[ScenarioKind, Dict[str, Any]] = {
    ScenarioKind.OFFLINE_OED: {
        "initial_points": 25, "collection_steps": 50, "gamma": 10.0,
        "track_id": None, "zero_tracking": True,
    },
    ScenarioKind.RANDOMIZED_EXPERIMENT: {
        "initial_points": 25, "collection_steps": 50, "gamma": 0.0,
        "track_id": None, "zero_tracking": True,
    },
    ScenarioKind.ONLINE_AL: {
        "initial_points": 50, "collection_steps": 100, "gamma": 10.0,
        "track_id": "oval", "zero_tracking": False,
    },
    ScenarioKind.ONLINE_NOAL: {
        "initial_points": 50, "collection_steps": 100, "gamma": 0.0,
        "track_id": "oval", "zero_tracking": False,
    },
    ScenarioKind.RACING_PHASE: {
        "initial_points": 0, "collection_steps": 0, "gamma": 0.0,
        "track_id": "complex", "zero_tracking": False,
    },
}


RACING_STEP_BUDGET = 600


class ScenarioSpec(_Frozen):
    """
    One experiment of a run.

    Unset fields take the defaults of their kind (see KIND_DEFAULTS).
    """

    kind: ScenarioKind
    name: Optional[str] = None
    initial_points: int = Field(default=0, ge=0)
    collection_steps: int = Field(default=0, ge=0)
    gamma: float = Field(default=0.0, ge=0)
    track_id: Optional[str] = None
    zero_tracking: bool = False
    free_space: Optional[FreeSpaceBounds] = None
    max_steps: Optional[int] = Field(default=None, ge=1)
    initial_speed: float = Field(default=0.0, ge=0)
    models_from: Optional[str] = None
    models_path: Optional[str] = None

    @model_validator(mode="before")
    @classmethod
    def _fill_kind_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict) or "kind" not in data:
            return data
        try:
            kind = ScenarioKind(data["kind"])
        except ValueError:
            return data
        filled = dict(KIND_DEFAULTS[kind])
        filled.update({k: v for k, v in data.items() if v is not None})
        filled.setdefault("name", kind.value)
        if kind.is_offline:
            filled.setdefault("free_space", {})
        if not kind.is_offline and filled.get("track_id") is None:
            filled["track_id"] = KIND_DEFAULTS[kind]["track_id"]
        return filled

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "ScenarioSpec":
        if self.kind.is_offline and self.free_space is None:
            raise ValueError(f"{self.kind.value} requires free_space bounds")
        if not self.kind.is_offline and not self.track_id:
            raise ValueError(f"{self.kind.value} requires a track_id")
        if self.kind in (ScenarioKind.OFFLINE_OED, ScenarioKind.RANDOMIZED_EXPERIMENT, ScenarioKind.ONLINE_AL, ScenarioKind.ONLINE_NOAL):
            if self.initial_points < 2:
                raise ValueError("learning scenarios need at least 2 initial points")
        return self

    @property
    def step_budget(self) -> int:
        """Episode length limit: the collection budget while learning, 600 steps for racing."""
        if self.max_steps is not None:
            return self.max_steps
        if self.kind is ScenarioKind.RACING_PHASE:
            return RACING_STEP_BUDGET
        return self.collection_steps


class OutputOptions(_Frozen):
    """Artifact switches."""

    write_models: bool = True
    timing_in_trajectory: bool = False


class RunConfig(_Frozen):
    """Complete run configuration document."""

    scenarios: List[ScenarioSpec] = Field(
        default_factory=lambda: [ScenarioSpec(kind=ScenarioKind.OFFLINE_OED)]
    )
    controller: ControllerConfig = ControllerConfig()
    scp: ScpConfig = ScpConfig()
    kernel: KernelBounds = KernelBounds()
    vehicle: VehicleConfig = VehicleConfig()
    output: OutputOptions = OutputOptions()
    seeds: List[int] = Field(default_factory=lambda: [0])
    output_dir: Optional[str] = None

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, value):
        if not value:
            raise ValueError("at least one seed is required")
        return value

    @model_validator(mode="after")
    def _check_scenario_chain(self) -> "RunConfig":
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ValueError(f"scenario names must be unique, got {names}")
        for i, scenario in enumerate(self.scenarios):
            if scenario.kind is ScenarioKind.RACING_PHASE:
                if scenario.models_from is None and scenario.models_path is None:
                    raise ValueError(
                        f"scenario {scenario.name} needs models_from or models_path"
                    )
            if scenario.models_from is not None and scenario.models_from not in names[:i]:
                raise ValueError(
                    f"scenario {scenario.name} takes models from unknown or later "
                    f"scenario {scenario.models_from!r}"
                )
            if scenario.models_path is not None and not Path(scenario.models_path).is_dir():
                raise ValueError(f"models_path {scenario.models_path} does not exist")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Validate a configuration mapping."""
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigError.from_validation_error(e) from e

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """
        Load a JSON configuration document.

        Raises:
            ConfigError: If the file is missing, not JSON, or fails validation.
        """
        path = Path(path)
        if not path.exists():
            raise ConfigError([(str(path), "configuration file not found")])
        try:
            data = json.loads(path.read_text(encoding="utf-8") or "{}")
        except json.JSONDecodeError as e:
            raise ConfigError([(f"{path}:{e.lineno}:{e.colno}", e.msg)]) from e
        if not isinstance(data, dict):
            raise ConfigError([("<root>", "configuration must be a JSON object")])
        return cls.from_dict(data)

    def scenario(self, name: str) -> ScenarioSpec:
        """Look up a scenario by name."""
        for scenario in self.scenarios:
            if scenario.name == name:
                return scenario
        raise KeyError(name)
