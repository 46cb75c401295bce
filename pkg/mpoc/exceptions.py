"""
Error hierarchy for the MPOC toolkit.

Every failure raised by the numerical modules derives from ``MpocError`` so
that management commands can translate it into a single exit status. The
subclasses that describe bad user input also derive from the matching
builtin (``ValueError``, ``LookupError``, ``ArithmeticError``) so callers
outside the toolkit can catch them the usual way.
"""

from typing import Iterable, Optional


class MpocError(Exception):
    """Root of all toolkit errors."""


class RejectedInput(MpocError, ValueError):
    """Input violates a precondition: wrong dimension, infeasible point, bad parameter."""


class InconsistentPattern(MpocError):
    """An orthogonality pair is strictly inactive on both sides at a feasible point."""

    def __init__(self, message: str, pair: Optional[int] = None):
        super().__init__(message)
        self.pair = pair


class DerivativeCheckError(MpocError, ArithmeticError):
    """A non-finite value showed up while finite differencing."""

    def __init__(self, message: str, coordinate: int):
        super().__init__(message)
        self.coordinate = coordinate


class UnknownProblem(MpocError, LookupError):
    """Catalog lookup failed."""

    def __init__(self, name: str, available: Iterable[str]):
        self.name = name
        self.available = sorted(available)
        super().__init__(
            f"unknown problem {name!r}; available: {', '.join(self.available)}"
        )


class ProblemFileError(MpocError, ValueError):
    """A problem document could not be parsed or validated."""

    def __init__(
        self,
        message: str,
        *,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        source: str = '<document>',
    ):
        self.path = path
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self._annotate(message))

    def _annotate(self, message: str) -> str:
        if self.line is not None:
            return f"{self.source}:{self.line}:{self.column}: {message}"
        if self.path is not None:
            return f"{self.source}: {self.path}: {message}"
        return f"{self.source}: {message}"


class CrossCheckError(MpocError):
    """Two independent computations of the same verdict disagree."""


class NotMStationary(RejectedInput):
    """The x part of a relaxed point is not M-stationary."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index
