"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class EntireLaplaceError(Exception):
    """Base class for library errors."""


class ParameterError(EntireLaplaceError, ValueError):
    """A parameter violates its documented precondition."""


class DomainError(EntireLaplaceError, ValueError):
    """Evaluation outside the domain of a function or of its continued transform.

    ``location`` holds the offending point (or a representative point of the
    offending singular set) when one is known.
    """

    def __init__(self, message: str, location: complex | None = None):
        super().__init__(message)
        self.location = location


class ConvergenceError(EntireLaplaceError, RuntimeError):
    """A quadrature or refinement loop hit its node cap without converging."""


class CertificateError(EntireLaplaceError, ValueError):
    """A required decay or smoothness certificate is not available."""


class InsufficientShift(ParameterError):
    """The additive constant in the Stieltjes transfer is below the monotonicity margin."""

    def __init__(self, message: str, a_min: float):
        super().__init__(message)
        self.a_min = a_min
