"""Exception types shared by the frontend and the analyses."""

from __future__ import annotations


class Mini3CError(Exception):
    """Base class for all user-facing errors."""


class SourceError(Mini3CError):
    """An error attached to a source location."""

    def __init__(self, message: str, filename: str = "<input>", line: int = 0):
        self.message = message
        self.filename = filename
        self.line = line
        super().__init__(f"{filename}:{line}: {message}")


class LexError(SourceError):
    pass


class ParseError(SourceError):
    pass


class ResolveError(SourceError):
    """Unresolved identifier, duplicate definition or an ill-typed construct."""


class ConfigError(Mini3CError):
    pass


class InvariantViolation(Mini3CError):
    """An internal consistency check failed; this is a bug, not bad input."""


class Unsatisfiable(Mini3CError):
    """A constraint graph has no solution under the given pins.

    ``witness`` is a chain of edges ``(src, dst)`` leading from the node that
    forced the value to the node whose constraint is violated.
    """

    def __init__(self, message: str, witness: list[tuple[int, int]]):
        self.witness = witness
        super().__init__(message)


class StaleSpan(Mini3CError):
    """A rewrite plan no longer matches the file text it was computed for."""
