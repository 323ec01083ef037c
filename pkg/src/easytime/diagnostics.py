"""Diagnostics shared by the language checker, compiler and runtime."""

from __future__ import annotations

from dataclasses import dataclass

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # ERROR or WARNING
    code: str
    message: str
    line: int = 0
    column: int = 0

    def render(self, filename: str = "<input>") -> str:
        return (
            f"{filename}:{self.line}:{self.column}: "
            f"{self.severity}[{self.code}]: {self.message}"
        )


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == ERROR for d in diagnostics)


def sort_diagnostics(diagnostics: list[Diagnostic]) -> list[Diagnostic]:
    """Stable ordering by source position; unpositioned entries first."""
    return sorted(diagnostics, key=lambda d: (d.line, d.column))
