"""Exception hierarchy shared by all modules."""


class NearMissesError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NearMissesError, ValueError):
    """A point was evaluated outside the chart domain."""


class InvalidQueryError(NearMissesError, ValueError):
    """A counting or sweep request violates its preconditions."""


class UnsupportedExactModeError(NearMissesError, ValueError):
    """Exact (integer) counting was requested for a chart without an exact lift."""


class CurvatureError(NearMissesError):
    """The curvature window is not strictly positive where it must be."""


class OutsideDualDomain(NearMissesError):
    """Newton inversion of the gradient failed; the target is not in grad f(D)."""


class DegenerateGeometryError(NearMissesError):
    """Dual geometry margin is not resolvable at the sampling resolution."""


class AccuracyError(NearMissesError):
    """A numerical refinement budget was exhausted.

    The best available estimate and its error estimate are attached.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class BudgetError(NearMissesError):
    """An enumeration would exceed its configured budget."""


class ConstructionError(NearMissesError):
    """A constructed object violates its contract; ``witness`` locates the failure."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PropertyPWitnessError(NearMissesError):
    """No rational direction with nonvanishing projected Hessian was found."""
