"""Exception types shared across the package.

DomainError maps to CLI exit code 1 (bad input / parameter domain),
GuardError to exit code 2 (enumeration or search budget exceeded).
"""


class DomainError(ValueError):
    """Input violates a documented precondition (bad n, k, spec string, ...)."""


class GuardError(RuntimeError):
    """A size guard or search budget was exceeded; no partial answer is returned."""


class SearchBudgetExceeded(GuardError):
    """Exact solver hit its node cap.  The result would be inexact, so we raise."""
