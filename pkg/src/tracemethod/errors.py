"""Exception hierarchy."""


class TraceMethodError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(TraceMethodError, ValueError):
    """Array shapes are incompatible with the requested operation."""


class InsufficientDataError(TraceMethodError, ValueError):
    """Too few samples to estimate the required statistics."""


class DegenerateInputError(TraceMethodError, ValueError):
    """A statistic is undefined for the given data (zero traces, rank 0, ...)."""

    def __init__(self, message, direction=None):
        if direction is not None:
            message = f"[{direction}] {message}"
        super().__init__(message)
        self.direction = direction


class NumericalError(TraceMethodError, ArithmeticError):
    """A numerical routine failed; ``diagnostics`` describes the input."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class IngestError(TraceMethodError):
    """Input files could not be read or are malformed."""
