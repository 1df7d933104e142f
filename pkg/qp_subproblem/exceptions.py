"""Exceptions raised while assembling convex subproblems."""


class SubproblemBuildError(ValueError):
    """Raised when linearization data is non-finite or shapes are inconsistent."""
