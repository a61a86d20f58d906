"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class RegimeError(ParameterError):
    """Parameters fall outside the supported fractional regime."""


class DimensionMismatchError(ValueError):
    """Array lengths are inconsistent with the grid or kernel."""


class InfeasibleWeightError(ValueError):
    """A weight lacks the positive part required by the quotient."""


class NoDescentDirectionError(RuntimeError):
    """No scaling of the given direction reaches a negative energy level."""


class MinFormulaError(RuntimeError):
    """The computed threshold disagrees with the two-eigenvalue minimum."""


class MonotonicityError(RuntimeError):
    """A sequence required to be monotone failed the check."""


class ConfigError(ValueError):
    """Invalid run configuration."""
