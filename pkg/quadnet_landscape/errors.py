"""Exception hierarchy for quadnet-landscape.

Every library error derives from QuadnetError and carries the CLI exit code
that reports it. Subclasses also inherit from the closest builtin so callers
that only know about ValueError/ArithmeticError keep working.
"""

from typing import Any, Optional

from .constants import EXIT_DEGENERATE, EXIT_NUMERICAL, EXIT_USAGE


class QuadnetError(Exception):
    """Base class for all quadnet-landscape errors."""

    exit_code = EXIT_USAGE


class InvalidArgumentError(QuadnetError, ValueError):
    """An argument is malformed: wrong shape, non-finite, out of range."""


class DomainError(InvalidArgumentError):
    """An argument lies outside the mathematical domain of the operation."""


class ResourceLimitError(QuadnetError):
    """A dense object would exceed its configured size cap."""


class PreconditionError(QuadnetError):
    """A mathematical hypothesis of the operation does not hold."""

    exit_code = EXIT_DEGENERATE


class DegenerateInstanceError(PreconditionError):
    """The data matrix is rank-deficient, so no certificate can be built."""


class NumericalFailureError(QuadnetError, ArithmeticError):
    """A non-finite value appeared, or a numerical result failed its own check."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, iteration: Optional[int] = None):
        if iteration is not None:
            message = f"{message} at iteration {iteration}"
        super().__init__(message)
        self.iteration = iteration


class FormatError(QuadnetError, ValueError):
    """A file does not follow its declared binary or text format.

    Attributes:
        offset: Byte offset of the problem (binary formats)
        line: 1-based line number of the problem (text formats)
    """

    def __init__(self, message: str, offset: Optional[int] = None, line: Optional[int] = None):
        location = ""
        if offset is not None:
            location = f" (byte offset {offset})"
        elif line is not None:
            location = f" (line {line})"
        super().__init__(message + location)
        self.offset = offset
        self.line = line


class PropertyFailureError(QuadnetError, AssertionError):
    """An empirical check contradicted a closed-form bound.

    Attributes:
        witness: The inputs that produced the violation
    """

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness
