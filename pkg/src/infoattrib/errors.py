"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class InfoAttribError(Exception):
    """Base class for all library errors."""


class CapacityError(InfoAttribError):
    """A size cap (rank, extension count, selector space) would be exceeded."""


class ValidationError(InfoAttribError, ValueError):
    """Malformed user input: unknown keys, incomplete worth maps, bad JSON."""


class DomainError(InfoAttribError, ValueError):
    """An operation precondition does not hold for the given arguments."""


class InvalidElementError(DomainError):
    """An element does not belong to the boolean algebra at hand."""


class ConvergenceError(InfoAttribError, ArithmeticError):
    """An iterative solver failed to reach its tolerance.

    Attributes:
        residuals: residual history, one entry per sweep.
        label: human-readable name of the failing problem instance.
    """

    def __init__(self, message, residuals=(), label=None):
        super().__init__(message)
        self.residuals = list(residuals)
        self.label = label
