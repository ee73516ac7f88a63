"""Exception hierarchy shared by all geoflow modules."""


class GeoflowError(Exception):
    """Base class for every error raised by geoflow."""


class DimensionError(GeoflowError, ValueError):
    """Operands have incompatible shapes."""


class DomainError(GeoflowError, ValueError):
    """An input violates a required invariant (symmetry, definiteness, ...)."""

    def __init__(self, message, invariant=None):
        super().__init__(message)
        self.invariant = invariant


class SingularError(DomainError):
    """A matrix that must be invertible is (numerically) singular."""

    def __init__(self, message):
        super().__init__(message, invariant="invertible")


class MagnitudeOverflowError(GeoflowError, OverflowError):
    """A matrix function produced non-finite entries."""


class ConvergenceError(GeoflowError):
    """A flow did not reach its stopping tolerance within the step budget.

    The partial trajectory is kept so callers can still inspect or export it.
    """

    def __init__(self, message, grad_norm, trajectory=None):
        super().__init__(message)
        self.grad_norm = grad_norm
        self.trajectory = trajectory


class FlowDivergenceError(GeoflowError):
    """The integrated state left its state space beyond the drift tolerance."""

    def __init__(self, message, step, drift=None):
        super().__init__(message)
        self.step = step
        self.drift = drift


class ConfigurationError(GeoflowError, ValueError):
    """Invalid integrator settings or an unsupported flow/integrator pairing."""
