"""Exception types shared across the package."""


class TopologyError(Exception):
    """Base class for package errors."""


class InsufficientSamplesError(TopologyError, ValueError):
    """The panel is too short for the requested lag window."""


class UnstableModelError(TopologyError, ValueError):
    """A discretized model failed the stability check."""


class IllConditionedError(TopologyError, ArithmeticError):
    """A linear system could not be repaired by the ridge term."""


class ConvergenceError(TopologyError, RuntimeError):
    """An iterative solver hit its iteration budget.

    ``residual`` carries the last stationarity residual (or duality gap)
    so callers can decide whether the partial result is usable.
    """

    def __init__(self, message, residual=float("nan"), result=None):
        super().__init__(message)
        self.residual = residual
        self.result = result
