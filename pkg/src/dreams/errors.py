"""Exception types shared across the package."""

from __future__ import annotations


class DreamsError(Exception):
    """Base class for all errors raised by this package."""

    def __init__(self, detail: str, offending_id: str | None = None):
        super().__init__(detail)
        self.detail = detail
        self.offending_id = offending_id


class ValidationError(DreamsError):
    """Input violates a model invariant or a field constraint."""


class NotFoundError(DreamsError):
    """A referenced node, link, evidence item, or model does not exist."""


class ConflictError(DreamsError):
    """The operation would duplicate something that must be unique."""


class StaleRevisionError(DreamsError):
    """The caller's revision no longer matches the document."""


class StaleIndexError(DreamsError):
    """The search index was built from an older document revision."""


class UnsupportedVersionError(DreamsError):
    """The file declares a schema version this build cannot read."""


class ParseError(DreamsError):
    """The input text is not well-formed."""

    def __init__(self, detail: str, line: int | None = None, column: int | None = None):
        super().__init__(detail)
        self.line = line
        self.column = column


class IncompleteLogError(DreamsError):
    """A session log is missing the phase markers a computation needs."""


class StorageError(DreamsError):
    """Persisting a document failed; in-memory state was left untouched."""
