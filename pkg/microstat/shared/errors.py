"""
Exception hierarchy and warning categories.
"""

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence


@dataclass(frozen=True)
class Violation:
    """
    A single broken data rule.

    Args:
        identifier: The offending taxon, specimen or leaf identifier
        rule: Short machine-readable rule name (e.g. 'duplicate_taxon_id')
        message: Human readable explanation
    """

    identifier: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.identifier}: {self.message}"


class MicrostatError(Exception):
    """Base class for all microstat errors."""


class UsageError(MicrostatError):
    """Invalid command-line usage."""


class DataValidationError(MicrostatError, ValueError):
    """
    Input data violates a documented rule.

    Args:
        message: Error message
        violations: Optional list of individual rule violations
    """

    def __init__(
        self, message: str, violations: Optional[Sequence[Violation]] = None
    ):
        super().__init__(message)
        self.violations: list[Violation] = list(violations or [])


class ParseError(DataValidationError):
    """
    A text input could not be parsed.

    Args:
        message: Error message
        line: 1-based line number of the offending cell (if known)
        column: 1-based column number of the offending cell (if known)
        source: Name of the file or stream being parsed
    """

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        column: Optional[int] = None,
        source: Optional[str] = None,
    ):
        location = []
        if source:
            location.append(source)
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)
        self.line = line
        self.column = column
        self.source = source


class NumericalError(MicrostatError, RuntimeError):
    """A numerical routine failed to produce a usable result."""


class StatisticalWarning(UserWarning):
    """Non-fatal statistical condition that was flagged on a result."""


def flag(message: str, stacklevel: int = 3) -> None:
    """Emit a StatisticalWarning."""
    warnings.warn(message, StatisticalWarning, stacklevel=stacklevel)
