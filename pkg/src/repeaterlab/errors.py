"""Exception hierarchy shared by all repeaterlab modules."""

from __future__ import annotations


class RepeaterLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(RepeaterLabError, ValueError):
    """A physical parameter is outside its admissible range."""


class DomainError(InvalidParameterError):
    """A function argument lies outside the function's domain."""


class ZeroProbabilityError(RepeaterLabError, ArithmeticError):
    """A success probability is zero, so the expected waiting time diverges."""


class ConvergenceError(RepeaterLabError, ArithmeticError):
    """Numerical integration finished but violated photon-number balance."""


class GridError(RepeaterLabError, ValueError):
    """The integration window does not contain the pulse and its response."""


class DegenerateInputError(RepeaterLabError, ValueError):
    """A quantity is undefined for the given (near-zero) input."""


class TrialBudgetExceeded(RepeaterLabError, RuntimeError):
    """A Monte Carlo trial ran past its slot cap."""


class ScenarioError(RepeaterLabError, ValueError):
    """A scenario document is malformed or fails validation.

    ``line`` is the 1-based line number when the problem can be located.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
