"""Exception hierarchy for the ecmle package.

Every error raised deliberately by this package derives from
:class:`EvidenceError`, so callers can catch one type at API boundaries
while tests can pin down the precise failure mode.
"""

from __future__ import annotations


class EvidenceError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(EvidenceError):
    """Inputs have inconsistent or unsupported dimensions."""


class DegenerateDirectionError(EvidenceError):
    """A direction vector has (near-)zero norm and cannot be normalized."""


class NumericalError(EvidenceError):
    """A density or volume evaluation produced a non-finite value.

    ``point`` carries the offending location when one is known.
    """

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class SizeError(EvidenceError):
    """A sample is too small for the requested operation."""


class OddSampleError(EvidenceError):
    """A sample of odd size cannot be split into equal halves."""


class EmptyInputError(EvidenceError):
    """An input collection that must be non-empty is empty."""


class EmptyHpdError(EvidenceError):
    """The high-posterior-density subset came out empty."""


class DegenerateCoveringError(EvidenceError):
    """No ellipsoid could be placed over the high-density subset."""


class EmptySupportError(EvidenceError):
    """No evaluation draw fell inside the bounded support region."""


class SingularCovarianceError(EvidenceError):
    """A sample covariance matrix is singular or not positive definite."""
