"""Exception hierarchy for the toolkit."""

from typing import Optional


class MaxPlusTailsError(RuntimeError):
    """Base class for every error raised by the toolkit."""


class DimensionError(MaxPlusTailsError, ValueError):
    """Matrix shapes do not fit the requested operation."""


class ModelConfigError(MaxPlusTailsError):
    """A model configuration violates the schema or a model invariant."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        self.reason = message
        super().__init__(f"{path}: {message}" if path else message)


class ConfigError(MaxPlusTailsError):
    """Run configuration (flags or environment) is invalid."""


class AssumptionError(MaxPlusTailsError):
    """A model fails one of the structural assumptions (ST), (SP) or (LT)."""


class InstabilityError(MaxPlusTailsError):
    """The network is unstable (Lyapunov exponent not below the mean interarrival)."""


class NoDecayRegionError(MaxPlusTailsError):
    """Lambda(theta) + Lambda_T(-theta) is never negative for theta > 0."""


class EstimationError(MaxPlusTailsError):
    """A Monte Carlo estimate could not be produced."""


class TailWindowError(EstimationError):
    """Too few exceedances at the top of the quantile window."""


class DegenerateSampleError(EstimationError):
    """All sampled daters are equal: there is no tail to fit."""


class InfeasibleRoutingError(MaxPlusTailsError):
    """No routing probability stabilizes every path."""


class UsageError(MaxPlusTailsError):
    """Unknown subcommand or flag."""
