"""Exception types raised by buserkit."""


class BuserKitError(Exception):
    """Base class for all package errors."""


class DomainError(BuserKitError, ValueError):
    """An argument lies outside the domain of a function."""


class RegimeError(BuserKitError, ValueError):
    """A finite-measure operation was applied to an infinite-measure space, or vice versa."""


class InfeasibleBoundError(BuserKitError, ValueError):
    """No eigenvalue is compatible with the given Cheeger constant and curvature.

    Raised when ``h`` lies below the curvature floor ``sqrt(2K/pi)`` for ``K > 0``.
    """


class NumericalError(BuserKitError, RuntimeError):
    """An iterative routine failed to reach its tolerance.

    Attributes
    ----------
    achieved : float or None
        The best tolerance the routine reached before giving up.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
