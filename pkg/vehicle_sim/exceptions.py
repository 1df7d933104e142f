"""Exceptions raised by the vehicle simulator."""


class SteeringDomainError(ValueError):
    """Raised when a steering angle reaches +-pi/2, where tan is undefined."""
