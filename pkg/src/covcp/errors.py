"""Exception types shared across the library."""

from __future__ import annotations


class CovcpError(Exception):
    """Base class for all library errors.

    A ``stage`` label may be attached when an error crosses a pipeline
    boundary, so callers of the high-level driver can tell which step
    failed without inspecting tracebacks.
    """

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class DataValidationError(CovcpError, ValueError):
    """Malformed input data (non-finite entries, bad shapes, bad files)."""


class InvalidSegmentError(CovcpError, ValueError):
    """A requested observation segment is empty or out of bounds."""


class AdmissibilityError(CovcpError, ValueError):
    """A split index, trimming fraction, or kernel argument is outside the
    domain where the scan statistic is defined."""


class DegenerateDataError(CovcpError, ValueError):
    """Data carries no variation where the estimator requires some."""


class NotPositiveDefiniteError(CovcpError, ArithmeticError):
    """A matrix expected to be symmetric positive definite failed its
    triangular factorization.

    ``pivot`` is the 1-based index of the first non-positive pivot, i.e.
    the order of the leading minor that is not positive definite.
    """

    def __init__(self, message: str, *, pivot: int | None = None,
                 stage: str | None = None):
        super().__init__(message, stage=stage)
        self.pivot = pivot


class NumericalDegeneracyError(CovcpError, ArithmeticError):
    """A factorization failed even after the configured conditioning
    fallbacks (e.g. the full diagonal-jitter ladder)."""
