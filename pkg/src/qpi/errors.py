"""Exception types shared across the package.

Everything raised on purpose derives from QpiError so callers (and the CLI)
can separate our diagnostics from genuine bugs. DomainError and its PoleError
subclass map to CLI exit code 2, EscalationError feeds the guard-retry loop
in catalog.verify_identity, and InstabilityError is how a q -> 1 probe says
its extrapolation diagnostic is growing instead of shrinking.
"""


class QpiError(Exception):
    """Base class for all deliberate errors raised by this package."""


class DomainError(QpiError):
    """A parameter sits outside the hypotheses of the requested operation."""


class PoleError(DomainError):
    """A denominator factor vanishes at the requested parameter point."""


class NonConvergenceError(QpiError):
    """A series engine hit its term cap before meeting the stopping rule."""

    def __init__(self, message, terms=None, last_ratio=None):
        super().__init__(message)
        self.terms = terms
        self.last_ratio = last_ratio


class EscalationError(QpiError):
    """Two guarded evaluations disagreed beyond the requested accuracy."""

    def __init__(self, message, digits=None, guard=None, disagreement=None):
        super().__init__(message)
        self.digits = digits
        self.guard = guard
        self.disagreement = disagreement


class InstabilityError(QpiError):
    """Extrapolation differences grew level over level instead of converging."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class UsageError(QpiError):
    """Bad command-line input: unknown id, malformed point, unwritable path."""
