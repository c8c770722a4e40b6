"""Exception hierarchy.

Every error raised by the library derives from :class:`KGSError`.  The CLI
maps :class:`ValidationError` subclasses to exit code 2 and
:class:`Undecided` / :class:`NoConvergence` to exit code 3.
"""

from __future__ import annotations


class KGSError(Exception):
    """Base class for all library errors."""


class ValidationError(KGSError, ValueError):
    """Input does not satisfy a structural hypothesis."""


class DimensionMismatch(ValidationError):
    pass


class NegativeEntry(ValidationError):
    pass


class NonIntegerEntry(ValidationError):
    pass


class GraphNotAdmitted(ValidationError):
    """A validation check required by the requested operation failed."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DiameterHypothesisFailed(GraphNotAdmitted):
    pass


class InvalidDelta(ValidationError):
    pass


class NotRainbowMultiple(ValidationError):
    pass


class SourceRangeMismatch(ValidationError):
    pass


class InvalidPath(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class SchemaError(ValidationError):
    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class NoConvergence(KGSError, RuntimeError):
    pass


class NotCommonEigenvector(KGSError, RuntimeError):
    pass


class Undecided(KGSError, RuntimeError):
    pass


class DepthTooLarge(KGSError, MemoryError):
    pass


class Overflow(KGSError, OverflowError):
    pass
