"""Exception types shared across the package."""


class SplitJamError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGeometry(SplitJamError):
    """Two nodes coincide, so an inverse-square channel gain is undefined."""


class NonMonotoneCuts(SplitJamError):
    """Cut indices are not strictly increasing inside the layer range."""


class UnreachableLink(SplitJamError):
    """A transmission was requested over a link with zero data rate."""


class BrokenChain(SplitJamError):
    """Transmission list does not cover the forward and backward chains."""


class DeadEnd(SplitJamError):
    """No valid action exists for the current environment state."""


class InvalidAction(SplitJamError):
    """An action violating the current action mask was executed."""
