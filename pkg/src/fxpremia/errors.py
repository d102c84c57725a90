"""Exception taxonomy for the fxpremia package.

Everything raised on purpose derives from FxPremiaError so callers can
catch package failures with a single except clause while still being able
to distinguish data problems from numerical ones.
"""

from __future__ import annotations


class FxPremiaError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FxPremiaError):
    """A CSV row could not be parsed.

    Carries the 1-based row number (header included) when known.
    """

    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class DomainError(FxPremiaError):
    """A value is outside its mathematical domain (non-positive rate,
    explosive AR root, invalid covariance, ...)."""


class NonStationaryError(DomainError):
    """Autoregressive lag polynomial has a root on or inside the unit circle."""


class CovarianceDomainError(DomainError):
    """Noise covariance parameters do not form a positive semidefinite matrix."""


class ContinuityError(FxPremiaError):
    """The monthly series has a gap or a duplicated month."""


class InsufficientDataError(FxPremiaError):
    """Too few observations for the requested operation."""


class DegenerateInputError(FxPremiaError):
    """Input has no variation where variation is required (e.g. a constant
    series handed to a normality or autocorrelation test)."""


class ParameterError(FxPremiaError):
    """An argument is invalid for reasons other than numeric domain
    (bad lag counts, inconsistent shapes, unusable configuration)."""


class SingularDesignError(FxPremiaError):
    """Regression design matrix is rank deficient."""


class FilterDivergenceError(FxPremiaError):
    """The Kalman recursion produced a non-positive innovation variance."""


class UnsupportedProcessError(FxPremiaError):
    """No rule is available to map the requested process orders."""
