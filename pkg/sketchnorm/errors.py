"""Exception types raised across sketchnorm.

The CLI maps each family to its own exit code.
"""


class SketchnormError(Exception):
    """Base class for all sketchnorm failures."""


class ParameterError(SketchnormError, ValueError):
    """Out-of-range parameter, dimension mismatch, or size cap violation."""


class MatrixParseError(SketchnormError, ValueError):
    """Malformed matrix input file."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class UnsupportedFormatError(MatrixParseError):
    """Input uses a field, symmetry or layout we do not read."""


class NumericalError(SketchnormError, RuntimeError):
    """A numerical routine could not produce a result."""

    def __init__(self, message: str, off_diag_norm: float | None = None):
        super().__init__(message)
        self.off_diag_norm = off_diag_norm


def require_open_unit(name: str, value: float) -> float:
    """Return value as float if it lies in the open interval (0, 1)."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a number, got {value!r}") from None
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")
    return value
