"""Exception hierarchy shared by all kboxkit modules.

CLI exit-code contract: precondition/parse problems map to exit code 2,
negative verdicts to exit code 1, internal invariant failures to exit 3.
"""

from __future__ import annotations


class KboxkitError(Exception):
    """Base class for all kboxkit errors."""


class InvalidParameterError(KboxkitError):
    """A parameter is outside its documented range (e.g. g < 2, k > n)."""


class DomainError(KboxkitError):
    """An input is outside the operation's domain (off-mesh box, point
    outside the unit cube, vertex query on a non-vertex, ...)."""


class PreconditionError(KboxkitError):
    """A documented precondition does not hold.  Carries an optional
    witness object (a node, a box union, ...) pinpointing the failure."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class InternalInvariantError(KboxkitError):
    """Two independent procedures that must agree did not, or a solver
    self-check failed.  Always indicates a bug, never bad input."""


class FunctionalUnboundedError(KboxkitError):
    """A per-point infimum is -infinity, i.e. some box union has a negative
    bound functional value; only possible when the pair fails avoidance of
    sure loss."""
