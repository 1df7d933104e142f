"""Exceptions raised by track handling and scenario runs."""


class TrackScenarioError(Exception):
    """Base class for track and scenario errors."""


class TrackFormatError(TrackScenarioError, ValueError):
    """Raised when a track document or centerline is malformed."""


class UnknownTrackError(TrackScenarioError, LookupError):
    """Raised when a track identifier cannot be resolved."""
