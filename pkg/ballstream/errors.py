"""Exception hierarchy for ballstream."""

from typing import Optional


class BallstreamError(Exception):
    """Base class for all ballstream errors."""


class InvalidInputError(BallstreamError, ValueError):
    """An argument violates an operation's preconditions."""


class DegenerateInputError(InvalidInputError):
    """Input that is well-formed but unusable, e.g. normalizing a zero vector."""


class RecordError(InvalidInputError):
    """A single malformed stream record. Streams skip these."""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"record {position}: {message}"
        super().__init__(message)


class InvalidStateError(BallstreamError, RuntimeError):
    """An internal invariant does not hold."""


class DataError(BallstreamError):
    """The data source cannot be used for the run."""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} (at stream position {position})"
        super().__init__(message)


class SpecError(BallstreamError, ValueError):
    """An experiment spec is invalid."""
