"""Exception types shared across the package.

Two failure families map onto the CLI exit codes: bad inputs or contract
violations (ValidationError, exit 2) and unreadable/unwritable artifacts
(FormatError, exit 3).
"""

from __future__ import annotations


class PromptRetrievalError(Exception):
    """Base class for all package errors."""


class ValidationError(PromptRetrievalError):
    """Inputs violate a documented precondition or invariant."""


class FormatError(PromptRetrievalError):
    """A serialized artifact is malformed or cannot be decoded.

    ``code`` is a short machine-readable diagnostic: "magic_mismatch",
    "version_mismatch", "truncated", "bad_json", "bad_field", ...
    """

    def __init__(self, message: str, *, code: str):
        super().__init__(message)
        self.code = code
