"""Exception hierarchy.

Validation problems (bad input) derive from ``ValidationError``; numerical
breakdowns derive from ``NumericalError``.  The CLI maps the first family to
exit code 1 and the second to exit code 2.
"""


class VortexError(Exception):
    """Base class for all package errors."""


class ValidationError(VortexError, ValueError):
    pass


class NumericalError(VortexError, ArithmeticError):
    pass


class CollisionError(ValidationError):
    """Two vortices coincide (mutual distance below the collision floor)."""


class DegenerateCirculation(ValidationError):
    """Total circulation vanishes, so the center of vorticity is undefined."""


class NonNormalizable(ValidationError):
    """Angular impulse is not positive after centering."""


class BadSubset(ValidationError):
    pass


class DimensionError(ValidationError):
    pass


class BadDimension(DimensionError):
    pass


class NegativeCirculation(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class NotRelativeEquilibrium(ValidationError):
    pass


class OutsideExistenceWindow(ValidationError):
    pass


class CollisionAtBoundary(OutsideExistenceWindow):
    pass


class AmbiguousGeometry(ValidationError):
    pass


class NoConvergence(NumericalError):
    pass


class DriftToCollision(NumericalError):
    pass


class TrivialMatchFailure(NumericalError):
    pass


class InternalInconsistency(NumericalError):
    """Morse index disagrees with the count of real stability pairs."""


class StepUnderflow(NumericalError):
    pass


class NoGrowthWindow(NumericalError):
    pass
