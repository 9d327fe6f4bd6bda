"""Exception hierarchy shared across the package."""


class DrocalError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DrocalError, ValueError):
    """Malformed or out-of-domain input."""


class InvalidBandError(InvalidInputError):
    """A frequency band is malformed or contains no grid frequency."""


class ModelEvaluationError(DrocalError):
    """A simulation model failed to produce a valid evaluation."""


class SolverError(DrocalError):
    """The LP solver failed (numerical breakdown, iteration limit, ...)."""

    def __init__(self, message, shape=None):
        if shape is not None:
            message = f"{message} (LP size: {shape[0]} rows x {shape[1]} cols)"
        super().__init__(message)
        self.shape = shape


class InfeasibleError(SolverError):
    """An LP that was required to be feasible is not."""


class EmptySetError(DrocalError):
    """An operation needed at least one eligible record and got none."""
