"""Exception hierarchy shared by the solver modules."""
from __future__ import annotations

from typing import Any


class NLHelmError(Exception):
    """Base class for every error raised by nlhelm."""


class DomainError(NLHelmError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class GridMismatchError(NLHelmError, ValueError):
    """Raised when fields or masks from different grids are combined."""


class FieldFormatError(NLHelmError, ValueError):
    """Raised when an NLHF field file is malformed."""


class ConfigError(NLHelmError, ValueError):
    """Raised when a run configuration cannot be parsed or validated."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(NLHelmError, RuntimeError):
    """Raised when an iteration exhausts its budget.

    ``best`` holds the best iterate found, so callers can still report it.
    """

    def __init__(self, message: str, iterations: int = 0, best: Any = None):
        super().__init__(message)
        self.iterations = iterations
        self.best = best


class PositivityError(NLHelmError, RuntimeError):
    """Raised when the quadratic form on A_- is detected to be indefinite."""


class EndpointError(NLHelmError, RuntimeError):
    """Raised when the far endpoint of the mountain-pass path fails verification."""
