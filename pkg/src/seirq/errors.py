"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` (bad input, CLI exit
code 1) and :class:`NumericalError` (a computation could not complete, CLI
exit code 2).
"""


class SeirqError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(SeirqError, ValueError):
    pass


class InvalidStateError(ValidationError):
    """A state vector contains non-finite entries or has the wrong shape."""


class DomainError(ValidationError):
    """A scalar argument lies outside the domain of a formula."""


class ConfigurationError(ValidationError):
    """A scenario, sweep or CLI configuration violates its schema."""


class UnsupportedParameterError(ConfigurationError):
    """The requested parameter does not exist for this model."""


class OutOfRangeError(ValidationError):
    """Interpolation requested outside the stored time range."""


class NumericalError(SeirqError, ArithmeticError):
    pass


class DivergenceError(NumericalError):
    """The integrator produced a non-finite state."""


class StiffnessError(NumericalError):
    """The adaptive step size fell below the underflow limit."""


class HorizonTooShortError(NumericalError):
    """The observable never fell back below the threshold before ``t_max``."""


class DegenerateEpidemicError(NumericalError):
    """The observable never exceeded the threshold, so no epidemic end exists."""


class BracketError(NumericalError):
    """A matching target lies outside the achievable interval."""

    def __init__(self, message, achievable=None):
        super().__init__(message)
        self.achievable = achievable


class NonMonotoneError(NumericalError):
    """The peak map is not monotone on the bracket, so bisection is unsafe."""


class EmptyInputError(ValidationError):
    """An output routine received no data to write."""


class OutputError(SeirqError, OSError):
    """An output file could not be written; the message names the path."""
