"""Shared exception types."""


class ParameterError(ValueError):
    """Raised when an operation is called with invalid or unsupported parameters."""


class NumericalBlowupError(RuntimeError):
    """An integration step produced NaN/Inf.  Carries the last valid time."""

    def __init__(self, message, last_valid_time):
        super().__init__(f"{message} (last valid time t={last_valid_time:.6g})")
        self.last_valid_time = last_valid_time


class DomainError(ValueError):
    """Raised when a point or ball lies outside the domain an operation needs."""


class GeometryError(ValueError):
    """Raised on geometrically invalid input (self-crossing polyline, non-simple boundary)."""


class EstimationError(RuntimeError):
    """Raised when a statistical estimate cannot be formed from the given data."""
