"""Exception types raised by the estimators."""


class CSKDEError(Exception):
    """Base class for all package errors."""


class KernelValidationError(CSKDEError, ValueError):
    """A kernel violates the compact, symmetric, C1 density requirements."""


class KernelCapabilityError(CSKDEError):
    """The kernel lacks a derivative that the caller needs."""


class DegenerateObservationDensity(CSKDEError, ArithmeticError):
    """The observation-time density is too small to divide by.

    Attributes
    ----------
    x : ndarray
        Offending evaluation points.
    q : ndarray
        Density values at those points.
    """

    def __init__(self, x, q, floor):
        self.x = x
        self.q = q
        self.floor = floor
        super().__init__(
            f"observation density below floor {floor:g} at x={x!r} (q={q!r})"
        )


class BetaFitInfeasible(CSKDEError, ValueError):
    """Method-of-moments Beta fit has no valid solution."""


class DegenerateBandwidth(CSKDEError, ArithmeticError):
    """The optimal-bandwidth formula has a zero or non-finite ingredient."""


class DataError(CSKDEError, ValueError):
    """Malformed input data (bad status codes, times outside the window)."""
