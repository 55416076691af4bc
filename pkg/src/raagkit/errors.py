"""Exception types shared by the toolkit and mapped to CLI exit codes."""

from __future__ import annotations


class RaagError(Exception):
    """Base class for toolkit errors."""

    exit_code = 1


class InputError(RaagError, ValueError):
    """Malformed user input: bad vertex index, unparsable group file, bad word."""

    exit_code = 2


class UsageError(RaagError, ValueError):
    """An operation was called outside its domain (mixed groups, empty path, R <= D...)."""

    exit_code = 2


class ResourceLimitError(RaagError):
    """A configured size or time limit was hit.

    ``completed`` carries the largest radius (or row count) finished before the limit.
    """

    exit_code = 3

    def __init__(self, message: str, completed: int | None = None):
        super().__init__(message)
        self.completed = completed


class CacheError(RaagError):
    """A cache file failed validation; callers rebuild instead of failing."""
