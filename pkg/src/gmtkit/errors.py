"""Exception taxonomy shared by the library and the command line front end."""

from __future__ import annotations


class GmtError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(GmtError):
    """Malformed arguments, files, or parameter combinations."""


class VerificationError(GmtError):
    """A constructed object failed one of its own stage checks."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class DepthBudgetError(GmtError):
    """The working depth cannot accommodate even the first certified scale."""

    def __init__(self, message: str, required_depth: int | None = None):
        super().__init__(message)
        self.required_depth = required_depth
