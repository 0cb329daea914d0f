"""Exception types raised across the package."""


class LatDiffError(Exception):
    """Base class for all package errors."""


class InvalidParameter(LatDiffError, ValueError):
    pass


class TailTruncationError(LatDiffError):
    """A Gaussian tail is cut off by the finite chain."""


class ConfigError(LatDiffError, ValueError):
    pass


class BoundaryLeakError(LatDiffError):
    """Population reached the chain edges during propagation."""


class StepSizeError(LatDiffError):
    """Trace drifted beyond tolerance; the time step is too large."""


class NoRootError(LatDiffError):
    pass


class NoSignChangeError(LatDiffError):
    pass


class QuadratureError(LatDiffError):
    pass


class TailBoundError(LatDiffError):
    """The lifetime-weight tail correction is too large to trust."""
