"""Exception and warning classes raised across the package."""


class FinslerError(Exception):
    """Base class for all domain errors."""


class OutOfDomain(FinslerError, ValueError):
    """A radius lies outside the closed annulus [R, 1]."""


class NonPositiveSpeed(FinslerError, ValueError):
    """A sound-speed profile evaluated to a non-positive value."""


class NotPositiveDefinite(FinslerError):
    """The fiber Hessian of F^2 is not positive definite."""


class DifferentiationFailure(FinslerError):
    """A finite-difference stencil does not fit inside the annulus."""


class OptimizationNoConverge(FinslerError):
    """A fiberwise supremum could not be located."""


class HerglotzViolated(FinslerError):
    """A tangential geodesic does not curve outwards."""


class Trapped(FinslerError):
    """A geodesic did not reach the outer boundary before t_max."""


class NoBracket(FinslerError):
    """No tangential geodesic realizes the requested angular separation."""


class DegenerateTrace(FinslerError):
    """A traced geodesic has vanishing radial speed off its turning point."""


class QuadratureNoConverge(FinslerError):
    """Two quadrature refinement levels disagree beyond tolerance."""


class GridMismatch(FinslerError, ValueError):
    """Operators and data live on different radial grids."""


class SolveFailure(FinslerError):
    """The regularized normal equations are rank deficient."""


class DegenerateEigen(FinslerError):
    """The largest Christoffel eigenvalue is not simple."""


class NotReversible(FinslerError):
    """An induced norm fails F(x, -y) = F(x, y)."""


class BoundaryNonVanishing(FinslerError):
    """A potential does not vanish on the boundary of the sphere bundle."""


class ConfigError(FinslerError, ValueError):
    """A run configuration could not be parsed or validated."""


class SteppedBelowDomain(UserWarning):
    """A geodesic crossed the (excluded) inner boundary r = R."""


class NonMonotone(UserWarning):
    """The half-spread r0 -> omega(r0, 1) is not monotone."""


class AliasWarning(UserWarning):
    """The highest retained angular mode carries significant energy."""
