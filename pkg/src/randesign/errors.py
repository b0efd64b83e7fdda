"""Exception types shared across the package.

Every failure mode named in a contract maps to one of these, so callers can
distinguish "your matrix is singular" from "this bound does not apply here".
"""


class RandesignError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(RandesignError):
    """Operands have incompatible shapes."""


class PsdViolationError(RandesignError):
    """A matrix tagged positive semidefinite has an eigenvalue below -tol."""


class SingularMatrixError(RandesignError):
    """A matrix required to be invertible is (numerically) singular."""

    def __init__(self, message, offending_eigenvalue=None):
        super().__init__(message)
        self.offending_eigenvalue = offending_eigenvalue


class NumericalFailureError(RandesignError):
    """An iterative numerical routine failed to converge."""


class DomainError(RandesignError):
    """A scalar parameter is outside its admissible range (e.g. delta not in (0,1))."""


class BoundInapplicableError(RandesignError):
    """A high-probability bound's preconditions fail (e.g. n below its sample threshold).

    Carries the violated threshold so experiment configs can report it.
    """

    def __init__(self, message, threshold=None):
        super().__init__(message)
        self.threshold = threshold


class UnavailableConstantError(RandesignError):
    """A model constant does not exist for this design (e.g. leverage of a Gaussian)."""


class UnsupportedBiasError(RandesignError):
    """The requested approximation-error profile cannot be represented exactly."""
