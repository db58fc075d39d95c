"""Exception types shared across the package."""


class McforgeError(Exception):
    """Base class for all mcforge errors."""


class DimensionError(McforgeError):
    """Array shapes are inconsistent with the operation's contract."""


class FormatError(McforgeError):
    """A file does not conform to its declared format.

    `offset` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DomainError(McforgeError):
    """A k-space sample location lies outside [-0.5, 0.5)^2."""


class ParameterError(McforgeError):
    """An argument value is outside the accepted set."""


class DegenerateTrajectoryError(ParameterError):
    """A trajectory is too short for the requested statistic."""


class ConfigError(McforgeError):
    """A dataset or training configuration cannot be satisfied."""


class SingularFitError(McforgeError):
    """A regression problem has no unique solution."""
