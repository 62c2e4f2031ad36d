"""Exception hierarchy.

Every error raised by the library derives from :class:`GaussRDError`, so a
caller can catch the whole family at once.  Subclasses are grouped by how the
CLI reports them: invalid input, an infeasible distortion target, or a
numerical failure.
"""

from __future__ import annotations


class GaussRDError(Exception):
    """Base class for all library errors."""


class InvalidInput(GaussRDError, ValueError):
    """Input violates a structural invariant (shape, sign, symmetry...)."""


class NonSymmetric(InvalidInput):
    pass


class NotPositiveDefinite(InvalidInput):
    pass


class DimensionMismatch(InvalidInput):
    pass


class NonpositiveNoise(InvalidInput):
    pass


class NegativeRate(InvalidInput):
    pass


class EmptySubset(InvalidInput):
    pass


class NonpositiveTheta(InvalidInput):
    pass


class NonpositiveDistortion(InvalidInput):
    pass


class SpecDimensionMismatch(InvalidInput):
    pass


class SingularGamma(InvalidInput):
    pass


class ZeroObservationRow(InvalidInput):
    pass


class BadSampleCount(InvalidInput):
    pass


class NotCyclic(InvalidInput):
    """Covariance is not circulant, or the noise variances differ."""


class HiddenSourceNotPD(InvalidInput):
    """Subtracting the chosen noise from Sigma_Y destroyed positive definiteness."""


class ModelFileError(InvalidInput):
    """Model file could not be parsed; the message cites line and field."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class Infeasible(GaussRDError):
    """The requested distortion target cannot be met."""


class InfeasibleSpec(Infeasible):
    pass


class InfeasibleAllocation(Infeasible):
    pass


class InsufficientBudget(Infeasible):
    pass


class OutsideD(Infeasible):
    pass


class DistortionNotPositive(Infeasible):
    pass


class NumericalFailure(GaussRDError, ArithmeticError):
    """An iterative routine failed to reach its tolerance."""
