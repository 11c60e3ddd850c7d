"""
errors.py — Exception hierarchy shared by every module.

Each class carries the process exit code the CLI reports for it, so the
mapping from failure kind to exit status lives in exactly one place.
"""

from __future__ import annotations

from typing import Optional


class EddyPeakError(Exception):
    """Base class for all toolkit errors."""
    exit_code = 3


class ConfigError(EddyPeakError, ValueError):
    """Invalid parameter, flag, or configuration file content."""
    exit_code = 2


class AlignmentError(ConfigError):
    """Sample and air sweeps are not on the same frequency grid."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class FileFormatError(EddyPeakError, ValueError):
    """Malformed CSV header or data row."""
    exit_code = 4

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalError(EddyPeakError, RuntimeError):
    """A numerical procedure failed to converge or to bracket its target."""
    exit_code = 3


class QuadratureError(NumericalError):
    """Panel refinement hit its cap before reaching the requested tolerance."""

    def __init__(self, message: str, previous: complex, current: complex):
        super().__init__(f"{message} (last estimates {previous!r}, {current!r})")
        self.previous = previous
        self.current = current


class NoPeakError(NumericalError):
    """The salience channel has no positive sample."""


class DomainError(NumericalError, ValueError):
    """Input lies outside the real-root domain of a closed-form inversion."""

    def __init__(self, message: str, discriminant: Optional[float] = None):
        if discriminant is not None:
            message = f"{message} (discriminant {discriminant:.6g})"
        super().__init__(message)
        self.discriminant = discriminant


class CalibrationError(NumericalError):
    """Measured amplitude exceeds the reference by more than the noise allowance."""
