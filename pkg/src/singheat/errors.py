"""Exception hierarchy shared by all modules.

DomainError marks violated preconditions (bad user input); NumericalError
and its subclasses mark failures that happen during a computation that was
legitimately started.  The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""


class DomainError(ValueError):
    """A precondition on the inputs is violated."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a usable result."""


class BlowupError(NumericalError):
    """The solution exceeded the configured blow-up ceiling."""


class StepFailureError(NumericalError):
    """The step size underflowed before reaching the end of the span."""


class CflError(NumericalError):
    """The explicit part of an IMEX step grew beyond the allowed factor."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class UndeterminedError(NumericalError):
    """A classification could not be decided at the available resolution."""
