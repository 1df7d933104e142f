"""
Race track geometry.

A track is a centerline polyline with a constant half-width. Positions
along it are addressed by arc length; tangents are central differences at
the vertices blended linearly inside each segment.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import json
import logging
import math

import numpy as np

from config.settings import get_settings
from track_scenarios.exceptions import TrackFormatError, UnknownTrackError

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"

# Half-length (m) of the arc-length window searched around a projection hint.
PROJECTION_WINDOW = 2.0


@dataclass(eq=False)
class Track:
    """
    Centerline track.

    Attributes:
        centerline: Ordered points, shape (M, 2), meters.
        half_width: Distance from the centerline to each border (m).
        closed: Whether the last point connects back to the first.
        name: Track identifier.
    """

    centerline: np.ndarray
    half_width: float
    closed: bool = True
    name: str = "track"
    _vertices: np.ndarray = field(init=False, repr=False)
    _arc: np.ndarray = field(init=False, repr=False)
    _tangents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        points = np.asarray(self.centerline, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise TrackFormatError(f"Centerline must have shape (M, 2), got {points.shape}")
        if self.closed and points.shape[0] > 1 and np.allclose(points[0], points[-1]):
            points = points[:-1]
        min_points = 3 if self.closed else 2
        if points.shape[0] < min_points:
            raise TrackFormatError(f"Track needs at least {min_points} points, got {points.shape[0]}")
        if not np.all(np.isfinite(points)):
            raise TrackFormatError("Centerline contains non-finite values")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise TrackFormatError(f"half_width must be positive, got {self.half_width}")

        self.centerline = points
        vertices = np.vstack([points, points[:1]]) if self.closed else points
        seg = np.linalg.norm(np.diff(vertices, axis=0), axis=1)
        if np.any(seg <= 1e-9):
            i = int(np.argmin(seg))
            raise TrackFormatError(f"Consecutive centerline points {i} and {i + 1} coincide")
        self._vertices = vertices
        self._arc = np.concatenate([[0.0], np.cumsum(seg)])
        self._tangents = self._vertex_tangents()

    def _vertex_tangents(self) -> np.ndarray:
        V = self._vertices
        segments = np.diff(V, axis=0)
        seg_dirs = segments / np.linalg.norm(segments, axis=1)[:, None]
        tangents = np.zeros_like(V)
        count = V.shape[0]
        for i in range(count):
            if self.closed:
                prev_point = V[i - 1] if i > 0 else V[-2]
                next_point = V[i + 1] if i < count - 1 else V[1]
            else:
                prev_point = V[max(i - 1, 0)]
                next_point = V[min(i + 1, count - 1)]
            diff = next_point - prev_point
            norm = np.linalg.norm(diff)
            if norm > 1e-12:
                tangents[i] = diff / norm
            else:
                tangents[i] = seg_dirs[max(i - 1, 0)]
        return tangents

    @property
    def length(self) -> float:
        """Centerline length (closing segment included for closed tracks)."""
        return float(self._arc[-1])

    @property
    def arc_lengths(self) -> np.ndarray:
        """Arc length of every centerline point."""
        return self._arc[: self.centerline.shape[0]].copy()

    def _normalize(self, s: float) -> float:
        if self.closed:
            return float(np.mod(s, self.length))
        return float(np.clip(s, 0.0, self.length))

    def _locate(self, s: float) -> Tuple[int, float]:
        s = self._normalize(s)
        i = int(np.searchsorted(self._arc, s, side="right") - 1)
        i = min(max(i, 0), self._vertices.shape[0] - 2)
        frac = (s - self._arc[i]) / (self._arc[i + 1] - self._arc[i])
        return i, float(np.clip(frac, 0.0, 1.0))

    def point_at(self, s: float) -> np.ndarray:
        """Centerline point at arc length ``s``."""
        i, frac = self._locate(s)
        return (1.0 - frac) * self._vertices[i] + frac * self._vertices[i + 1]

    def tangent_at(self, s: float) -> np.ndarray:
        """Unit centerline tangent at arc length ``s``."""
        i, frac = self._locate(s)
        blend = (1.0 - frac) * self._tangents[i] + frac * self._tangents[i + 1]
        norm = np.linalg.norm(blend)
        if norm <= 1e-12:
            segment = self._vertices[i + 1] - self._vertices[i]
            return segment / np.linalg.norm(segment)
        return blend / norm

    def heading_at(self, s: float) -> float:
        tangent = self.tangent_at(s)
        return math.atan2(tangent[1], tangent[0])

    def _segment_projection(self, point: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Arc length and distance of the closest point on every segment."""
        A = self._vertices[:-1]
        D = np.diff(self._vertices, axis=0)
        lengths_sq = np.sum(D ** 2, axis=1)
        frac = np.clip(np.sum((point - A) * D, axis=1) / lengths_sq, 0.0, 1.0)
        closest = A + frac[:, None] * D
        dist = np.linalg.norm(closest - point, axis=1)
        return self._arc[:-1] + frac * np.sqrt(lengths_sq), dist

    def project(self, point: Sequence[float], s_hint: Optional[float] = None, window: float = PROJECTION_WINDOW) -> float:
        """
        Arc length of the centerline point nearest to ``point``.

        With ``s_hint`` only segments within ``window`` meters of the hint
        (along the centerline) are searched, which keeps the projection on
        the right branch where the track passes close to itself.
        """
        point = np.asarray(point, dtype=float)
        s, dist = self._segment_projection(point)
        if s_hint is not None:
            starts, ends = self._arc[:-1], self._arc[1:]
            hint = self._normalize(s_hint)
            if self.closed:
                L = self.length
                gap = np.minimum(
                    np.abs(np.mod(starts - hint + L / 2, L) - L / 2),
                    np.abs(np.mod(ends - hint + L / 2, L) - L / 2),
                )
            else:
                gap = np.minimum(np.abs(starts - hint), np.abs(ends - hint))
            inside = (starts <= hint) & (hint <= ends)
            candidates = inside | (gap <= window)
            dist = np.where(candidates, dist, np.inf)
        return self._normalize(float(s[int(np.argmin(dist))]))

    def distance_to_centerline(self, point: Sequence[float]) -> float:
        _, dist = self._segment_projection(np.asarray(point, dtype=float))
        return float(np.min(dist))

    def lateral_offset(self, point: Sequence[float], s_hint: Optional[float] = None) -> float:
        """Signed offset from the centerline, positive to the left of the driving direction."""
        point = np.asarray(point, dtype=float)
        s = self.project(point, s_hint=s_hint)
        tangent = self.tangent_at(s)
        normal = np.array([-tangent[1], tangent[0]])
        return float(normal @ (point - self.point_at(s)))

    def contains(self, point: Sequence[float]) -> bool:
        """Whether ``point`` lies within half_width of the centerline."""
        return self.distance_to_centerline(point) <= self.half_width

    def borders(self) -> Tuple[np.ndarray, np.ndarray]:
        """Left and right border polylines, each of shape (M, 2)."""
        V = self.centerline
        T = self._tangents[: V.shape[0]]
        normals = np.column_stack([-T[:, 1], T[:, 0]])
        return V + self.half_width * normals, V - self.half_width * normals

    def to_dict(self) -> dict:
        """Track file document (coordinates rounded to 6 decimals)."""
        return {
            "name": self.name,
            "half_width": round(float(self.half_width), 6),
            "closed": self.closed,
            "centerline": [[round(float(x), 6), round(float(y), 6)] for x, y in self.centerline],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Track":
        try:
            return cls(
                centerline=np.asarray(data["centerline"], dtype=float),
                half_width=float(data["half_width"]),
                closed=bool(data.get("closed", True)),
                name=str(data.get("name", "track")),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, TrackFormatError):
                raise
            raise TrackFormatError(f"Malformed track document: {e}") from e

    @classmethod
    def from_segments(
        cls,
        start: Sequence[float],
        heading: float,
        segments: List[Dict[str, float]],
        half_width: float,
        closed: bool = True,
        spacing: float = 0.1,
        name: str = "track",
    ) -> "Track":
        """
        Build a centerline from straights and circular arcs.

        Args:
            start: First point.
            heading: Initial driving direction (rad).
            segments: ``{"straight": length}`` or ``{"arc": radius, "angle": signed turn}``
                (positive angles turn left).
            half_width: Track half-width.
            closed: Whether the track is a loop.
            spacing: Target distance between centerline points.
            name: Track identifier.
        """
        x, y = float(start[0]), float(start[1])
        points = [(x, y)]
        for segment in segments:
            if "straight" in segment:
                length = float(segment["straight"])
                steps = max(int(math.ceil(length / spacing)), 1)
                for _ in range(steps):
                    x += length / steps * math.cos(heading)
                    y += length / steps * math.sin(heading)
                    points.append((x, y))
            elif "arc" in segment:
                radius, angle = float(segment["arc"]), float(segment["angle"])
                steps = max(int(math.ceil(abs(angle) * radius / spacing)), 1)
                side = math.copysign(1.0, angle)
                cx = x - side * radius * math.sin(heading)
                cy = y + side * radius * math.cos(heading)
                for i in range(1, steps + 1):
                    h = heading + angle * i / steps
                    points.append((cx + side * radius * math.sin(h), cy - side * radius * math.cos(h)))
                heading += angle
                x, y = points[-1]
            else:
                raise TrackFormatError(f"Unknown segment {segment}")
        return cls(centerline=np.array(points), half_width=half_width, closed=closed, name=name)


def save_track(track: Track, path: Union[str, Path]) -> Path:
    """Write a track file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(track.to_dict(), indent=1), encoding="utf-8")
    return path


def load_track(path: Union[str, Path]) -> Track:
    """
    Read a track file.

    Raises:
        TrackFormatError: If the file is not a valid track document.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise TrackFormatError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise TrackFormatError(f"{path}: track document must be an object")
    data.setdefault("name", path.stem)
    return Track.from_dict(data)


def available_tracks() -> List[str]:
    """Identifiers of the bundled tracks and those in ``Settings.track_dir``."""
    names = {p.stem for p in DATA_DIR.glob("*.json")}
    track_dir = get_settings().track_dir
    if track_dir:
        names |= {p.stem for p in Path(track_dir).glob("*.json")}
    return sorted(names)


def load_bundled_track(track_id: str) -> Track:
    """
    Load a track by identifier, looking in ``Settings.track_dir`` first.

    Raises:
        UnknownTrackError: If no track file has that identifier.
    """
    track_dir = get_settings().track_dir
    candidates = ([Path(track_dir) / f"{track_id}.json"] if track_dir else []) + [DATA_DIR / f"{track_id}.json"]
    for path in candidates:
        if path.exists():
            logger.debug(f"Loading track {track_id} from {path}")
            return load_track(path)
    raise UnknownTrackError(f"Unknown track {track_id!r}; available: {available_tracks()}")
