"""Exception types shared across the package."""


class PumtuneError(Exception):
    """Base class for all pumtune-specific failures."""


class SingularSystem(PumtuneError):
    """A symmetric system could not be factorized even at maximum jitter."""


class UncoveredPoint(PumtuneError):
    """An evaluation point lies outside every subdomain's weight support."""


class InsufficientPoints(PumtuneError):
    """An operation needs more data points than are available."""


class EmptySubdomain(PumtuneError):
    """A subdomain holds no member points, so no local model can be fit."""
