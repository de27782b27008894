"""Exception hierarchy shared across the package."""


class AwaeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(AwaeError, ValueError):
    """Invalid configuration value.

    Attributes:
        field: name of the offending configuration field.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class StreamError(AwaeError):
    """A stream cannot be produced or consumed."""


class ParseError(StreamError):
    """A CSV stream file contains a malformed cell."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)


class TrainingError(AwaeError):
    """A base learner cannot be fit on the given data."""


class ShapeError(AwaeError, ValueError):
    """Feature matrix width does not match the model."""


class StateError(AwaeError):
    """An operation was called on an object in the wrong state."""


class UnsupportedTaskError(AwaeError):
    """The operation does not support this kind of classification task."""


class DiversityUndefinedError(AwaeError):
    """Generalized diversity needs at least two ensemble members."""


class MetricError(AwaeError, ValueError):
    """A metric was asked for on unusable input."""


class SerializationError(AwaeError):
    """A binary model or pool blob is malformed or has the wrong version."""
