"""Exception hierarchy shared by every module."""


class ResonateError(Exception):
    """Base class for all library errors."""


class DomainError(ResonateError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class DomainExit(ResonateError):
    """A trajectory state left the phase-space domain of the model.

    Raised by right-hand sides; the integrator turns it into a ``LeftDomain``
    event instead of a crash.
    """


class ConfigError(ResonateError, ValueError):
    """Invalid or inconsistent configuration."""


class NoResonance(ResonateError):
    """The target frequency is not attained by omega on the domain."""


class DegenerateResonance(ResonateError):
    """omega'(a) vanishes at the resonant amplitude."""


class UnsupportedOrder(ResonateError):
    """The generic averaging engine only handles orders 1 and 2."""


class ResolutionError(ResonateError):
    """Spectral grid too coarse, or a polynomial fit in rho failed."""


class ValidationError(ResonateError, ValueError):
    """User-supplied closed form violates the degree bounds."""


class Inconclusive(ResonateError):
    """The available expansion orders do not decide the question."""


class StiffnessError(ResonateError):
    """Step size underflow in the explicit integrator."""

    def __init__(self, message, t=None, y=None):
        super().__init__(message)
        self.t = t
        self.y = y
