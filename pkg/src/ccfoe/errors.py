"""Exception hierarchy."""


class CcfoeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(CcfoeError, ValueError):
    """A parameter set is infeasible or unsupported."""


class InputError(CcfoeError, ValueError):
    """Input data violates an operation's preconditions."""


class CaptureError(CcfoeError, OSError):
    """A recorded IQ capture is missing, empty or malformed."""


class SLRError(CcfoeError, ArithmeticError):
    """The segmented regression could not produce a valid fit."""


class NoBreakpoints(SLRError):
    """Quadratic discriminant is negative: no two-kink structure."""


class DegenerateQuadratic(SLRError):
    """Leading quadratic coefficient vanishes: at most one breakpoint resolvable."""


class BreakpointOutOfRange(SLRError):
    """A recovered breakpoint lies outside the sampled abscissa range."""

    def __init__(self, message, roots):
        super().__init__(message)
        self.roots = roots


class IllConditioned(SLRError):
    """A 4x4 normal-equation system is singular or too badly conditioned."""
