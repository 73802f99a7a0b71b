"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, FormatError -> 3,
NumericError -> 4. Everything else is a plain bug.
"""


class EstError(Exception):
    pass


class ShapeError(EstError):
    """Operand shapes are incompatible for the requested operation."""


class GraphError(EstError):
    """Autodiff graph misuse (e.g. backward called twice on one recording)."""


class ConfigError(EstError):
    """Invalid or unknown configuration value."""


class FormatError(EstError):
    """A serialized file is malformed; message carries the byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UndefinedMetricError(EstError):
    """Metric is undefined for the given inputs (e.g. single-class AUC)."""


class NumericError(EstError):
    """Non-finite value encountered where finiteness is required."""
