"""Exception hierarchy with stable error codes for the CLI."""

from __future__ import annotations


class SemialgError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class DimensionMismatch(SemialgError):
    code = "dimension-mismatch"


class ParseError(SemialgError):
    code = "parse-error"

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class UnknownIdentifier(ParseError):
    code = "unknown-identifier"


class NotWellDefined(SemialgError):
    """The expression has no value on (part of) the region of interest."""

    code = "not-well-defined"


class DivisionByZero(NotWellDefined):
    code = "division-by-zero"


class EvenRootOfNegative(NotWellDefined):
    code = "even-root-of-negative"


class EmptyBoxBound(SemialgError):
    """No finite enclosure available and no explicit ball bound supplied."""

    code = "empty-box-bound"


class OrderTooSmall(SemialgError):
    code = "order-too-small"

    def __init__(self, order, min_order):
        self.order = order
        self.min_order = min_order
        super().__init__(
            f"relaxation order {order} too small, minimum admissible is {min_order}"
        )


class SupportNotCovered(SemialgError):
    code = "support-not-covered"


class ExtractionFailed(SemialgError):
    code = "extraction-failed"


class NoFeasiblePoint(SemialgError):
    code = "no-feasible-point"


class ProblemTooLarge(SemialgError):
    code = "problem-too-large"


class SdpaFormatError(ParseError):
    code = "sdpa-format-error"
