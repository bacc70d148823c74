"""Exception hierarchy shared by all diskmdp modules."""
from __future__ import annotations

from dataclasses import dataclass


class DiskMdpError(Exception):
    """Base class for all errors raised by diskmdp."""


@dataclass
class SyntaxIssue:
    line: int
    column: int
    message: str
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        return text


class ModelSyntaxError(DiskMdpError):
    """Raised by the parser; carries every issue found, in source order."""

    def __init__(self, issues: list[SyntaxIssue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


class ModelTypeError(DiskMdpError):
    def __init__(self, expr: str, expected: str, found: str, where: str = ""):
        self.expr = expr
        self.expected = expected
        self.found = found
        msg = f"type error in {expr!r}: expected {expected}, found {found}"
        if where:
            msg = f"{where}: {msg}"
        super().__init__(msg)


class EvaluationError(DiskMdpError):
    """An expression could not be evaluated (division by zero, unbound name)."""


class ModelError(DiskMdpError):
    """A state violates the model semantics (domain, distribution, partition range)."""


class FormatError(DiskMdpError):
    """Malformed inverse-sequential matrix stream or auxiliary file."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)


class FrameError(FormatError):
    """Corrupt compression frame."""


class BackwardSeekError(DiskMdpError):
    """Raised by the instrumented file layer in strict mode."""


class NonConvergenceError(DiskMdpError):
    pass
