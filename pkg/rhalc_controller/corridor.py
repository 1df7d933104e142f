"""
Half-plane corridors and reference windows.

On a track every horizon step gets two parallel half-planes around the
reference point; in free space every step gets the four sides of the
experiment box.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Sequence

import numpy as np

from config.schemas import FreeSpaceBounds

if TYPE_CHECKING:
    from track_scenarios.track import Track


@dataclass(frozen=True)
class HalfPlaneSet:
    """Constraints normals @ p <= offsets on one position."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "normals", np.asarray(self.normals, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "offsets", np.asarray(self.offsets, dtype=float).reshape(-1))
        if self.normals.shape[0] != self.offsets.shape[0]:
            raise ValueError("One offset per half-plane normal is required")

    @property
    def num_rows(self) -> int:
        return self.offsets.shape[0]

    def residuals(self, point: np.ndarray) -> np.ndarray:
        """normals @ point - offsets (positive entries are violations)."""
        return self.normals @ np.asarray(point, dtype=float) - self.offsets

    def contains(self, point: np.ndarray, tol: float = 0.0) -> bool:
        return bool(np.all(self.residuals(point) <= tol))

    def to_dict(self) -> dict:
        return {"normals": self.normals.tolist(), "offsets": self.offsets.tolist()}


@dataclass(frozen=True)
class Corridor:
    """One half-plane set per horizon step k, constraining p_{k+1}."""

    steps: List[HalfPlaneSet] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.steps)

    @property
    def num_rows(self) -> int:
        return sum(step.num_rows for step in self.steps)

    def row_residuals(self, positions: np.ndarray) -> np.ndarray:
        """Stacked residuals of p_1..p_H, in row order."""
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        if positions.shape[0] != self.horizon:
            raise ValueError(f"Expected {self.horizon} positions, got {positions.shape[0]}")
        if not self.steps:
            return np.zeros(0)
        return np.concatenate([step.residuals(p) for step, p in zip(self.steps, positions)])

    def to_dict(self) -> dict:
        return {"steps": [step.to_dict() for step in self.steps]}


@dataclass(frozen=True)
class ReferenceWindow:
    """
    Reference positions r_1..r_H.

    Attributes:
        points: Shape (H, 2).
        arc_lengths: Centerline arc length of every point, shape (H,); None in free space.
    """

    points: np.ndarray
    arc_lengths: Optional[np.ndarray] = None

    @property
    def horizon(self) -> int:
        return self.points.shape[0]


def _lane(point: np.ndarray, tangent: np.ndarray, half_width: float) -> HalfPlaneSet:
    normal = np.array([-tangent[1], tangent[0]])
    offset = float(normal @ point)
    return HalfPlaneSet(
        normals=np.vstack([normal, -normal]),
        offsets=np.array([offset + half_width, -offset + half_width]),
    )


def build_corridor(track: "Track", reference: ReferenceWindow, half_width: float) -> Corridor:
    """
    Two half-planes parallel to the centerline tangent at each reference point.

    Args:
        track: Track providing tangents by arc length.
        reference: Reference window with arc lengths.
        half_width: Lateral offset of both half-planes (m).

    Returns:
        Corridor with one pair per horizon step.
    """
    if half_width <= 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    if reference.arc_lengths is None:
        raise ValueError("Track corridors need reference arc lengths")
    return Corridor(
        steps=[
            _lane(point, track.tangent_at(s), half_width)
            for point, s in zip(reference.points, reference.arc_lengths)
        ]
    )


def box_corridor(bounds: FreeSpaceBounds, horizon: int) -> Corridor:
    """The experiment box x_min <= x <= x_max, y_min <= y <= y_max at every step."""
    box = HalfPlaneSet(
        normals=np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
        offsets=np.array([bounds.x_max, -bounds.x_min, bounds.y_max, -bounds.y_min]),
    )
    return Corridor(steps=[box] * horizon)


def track_reference(
    track: "Track",
    position: Sequence[float],
    horizon: int,
    spacing: float,
    s_hint: Optional[float] = None,
) -> ReferenceWindow:
    """
    Centerline points ahead of the projection of ``position``.

    r_{k+1} = point_at(s0 + (k + 1) * spacing), where s0 is the arc length of
    the nearest centerline point (searched near ``s_hint`` when given).
    """
    s0 = track.project(position, s_hint=s_hint)
    arc = s0 + spacing * np.arange(1, horizon + 1)
    if track.closed:
        arc = np.mod(arc, track.length)
    else:
        arc = np.minimum(arc, track.length)
    points = np.array([track.point_at(s) for s in arc])
    return ReferenceWindow(points=points, arc_lengths=arc)


def hold_reference(position: Sequence[float], horizon: int) -> ReferenceWindow:
    """The current position repeated over the horizon."""
    return ReferenceWindow(points=np.tile(np.asarray(position, dtype=float), (horizon, 1)))
