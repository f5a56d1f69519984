"""Exception hierarchy and warnings shared across the package."""


class MemsdError(Exception):
    """Base class for every error raised by memsd."""


class ConfigError(MemsdError):
    """Invalid configuration, geometry, or violated operation precondition."""


class PhysicsError(MemsdError):
    """A physically meaningful failure (pull-in, lost resonance, ...)."""


class PullInError(PhysicsError):
    """No stable static equilibrium exists at the requested voltage."""


class OverclosureError(PhysicsError):
    """The beam closed the gap somewhere over an electrode span."""

    def __init__(self, message, time=None, q=None):
        super().__init__(message)
        self.time = time
        self.q = q


class ConvergenceError(MemsdError):
    """An iterative scheme or quadrature failed to converge; likely a bug upstream."""


class SpectralFitError(PhysicsError):
    """Resonance fitting failed: no usable peak, or half-power points out of band."""


class UnsettledWarning(UserWarning):
    """A trajectory did not reach steady state within the allowed time."""
