"""Exception and warning types raised by the numerical layers."""


class ParisRuinError(Exception):
    """Base class for errors raised by this package."""


class ConvergenceFailure(ParisRuinError):
    """A root finder or inversion routine did not reach its tolerance."""


class MethodUnavailable(ParisRuinError):
    """The requested numerical method does not apply to the model."""


class TruncationFailure(ParisRuinError):
    """A tail bound could not be met within the configured truncation."""


class DomainError(ParisRuinError, ValueError):
    """Arguments fall outside the domain where an identity holds."""


class MixtureDomainError(DomainError):
    """An exponential-mixture payoff makes the value function diverge."""


class GridTooCoarse(ParisRuinError, ValueError):
    """The simulation time step is too coarse for the Parisian delay."""


class NetProfitViolation(UserWarning):
    """psi'(0+) <= 0: the process does not drift to +infinity."""


class PrecisionWarning(UserWarning):
    """Estimated quadrature error exceeds the advertised accuracy."""


class RangeWarning(UserWarning):
    """A formula value falls outside the range implied by its definition."""
