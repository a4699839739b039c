"""Exception hierarchy shared by all modules."""


class UmaxError(Exception):
    """Base class for every error raised by the package."""


class DegreeError(UmaxError, ValueError):
    """Kernel degree or point count is out of range."""


class DomainError(UmaxError, ValueError):
    """A function was evaluated outside the region where it is defined."""


class ValidationError(UmaxError, ValueError):
    """An object failed a construction-time validation probe."""


class FamilyError(UmaxError, TypeError):
    """An operation was requested for an unsupported kernel family."""


class ConditionError(UmaxError):
    """A structural condition of the limit theorem is violated."""


class BoundaryMaximum(ConditionError):
    """The kernel maximum is attained where some of the points coincide."""


class DegenerateHessian(ConditionError):
    """The Hessian at a maximizer is singular."""


class B3Violation(ConditionError):
    """Every density product integral over the maximizers vanishes."""


class ModeMismatch(ConditionError):
    """Curvature sign does not match the requested u-max / u-min mode."""


class ConsistencyError(UmaxError, ArithmeticError):
    """Numerical result contradicts an identity that must hold (e.g. H_n > M)."""


class UndefinedTauError(UmaxError, ArithmeticError):
    """The dependence ratio tau is undefined because p_hat is zero."""


class ConfigError(UmaxError, ValueError):
    """Experiment configuration failed schema validation."""
