"""Exception types shared across the engine."""

from __future__ import annotations


class MsaLensError(Exception):
    """Base class for all engine errors."""


class EmptyDocument(MsaLensError):
    """Raised when a document yields no sentences."""


class TooLong(MsaLensError):
    """Raised when a statement segments into more than the sentence cap."""

    def __init__(self, count: int, limit: int):
        super().__init__(f"statement has {count} sentences, limit is {limit}")
        self.count = count
        self.limit = limit


class IndexOutOfRange(MsaLensError):
    """Raised for an invalid sentence index."""


class InvalidMetadata(MsaLensError):
    """Raised when statement metadata fails validation."""


class IncompleteMapping(MsaLensError):
    """Raised when the jurisdiction mapping document has missing or duplicate cells."""

    def __init__(self, missing: list, duplicates: list):
        parts = []
        if missing:
            parts.append(f"missing cells: {missing}")
        if duplicates:
            parts.append(f"duplicate cells: {duplicates}")
        super().__init__("; ".join(parts) or "incomplete mapping")
        self.missing = missing
        self.duplicates = duplicates


class DegenerateHead(MsaLensError):
    """Raised when a classification head is given single-class training data."""

    def __init__(self, criterion):
        super().__init__(f"head {criterion} has single-class training data")
        self.criterion = criterion


class BackendUnavailable(MsaLensError):
    """Raised when a remote backend cannot be reached."""


class MalformedReply(MsaLensError):
    """Raised when a remote reply does not follow the YES/NO protocol."""


class TooManyTokens(MsaLensError):
    """Raised when exact Shapley enumeration is asked for too many tokens."""

    def __init__(self, count: int, limit: int):
        super().__init__(f"{count} tokens exceeds exact enumeration limit {limit}")
        self.count = count
        self.limit = limit


class SingularSystem(MsaLensError):
    """Raised when the sampled kernel regression design is rank-deficient."""


class NotRelevant(MsaLensError):
    """Raised when evidence status is requested for an irrelevant prediction."""


class EmptySlice(MsaLensError):
    """Raised when a corpus slice for a vocabulary distribution is empty."""


class NotFound(MsaLensError):
    """Raised when a stored record does not exist."""


class VersionConflict(MsaLensError):
    """Raised when a statement id is re-put with different content."""


class UnknownTarget(MsaLensError):
    """Raised when a review references a nonexistent statement or sentence."""


class StaleRevision(MsaLensError):
    """Raised when an optimistic review write carries an outdated revision."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"expected revision {expected}, current is {actual}")
        self.expected = expected
        self.actual = actual
