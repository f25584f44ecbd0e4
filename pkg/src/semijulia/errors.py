"""Exception hierarchy shared by every module."""


class SemiJuliaError(Exception):
    pass


class DimensionMismatch(SemiJuliaError, ValueError):
    pass


class IndexOutOfRange(SemiJuliaError, IndexError):
    pass


class UnsupportedDimension(SemiJuliaError, ValueError):
    pass


class DegenerateLeadingCoefficient(SemiJuliaError, ValueError):
    pass


class NonConvergence(SemiJuliaError, RuntimeError):
    """Raised by iterative solvers; ``diagnostic`` carries the last iterate."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class EmptyWord(SemiJuliaError, ValueError):
    pass


class BudgetExceeded(SemiJuliaError, RuntimeError):
    pass


class DegreeBudgetExceeded(BudgetExceeded):
    pass


class GeometryMismatch(SemiJuliaError, ValueError):
    pass


class NotAFixedPoint(SemiJuliaError, ValueError):
    pass


class EmptyComponent(SemiJuliaError, ValueError):
    pass


class PreconditionFailed(SemiJuliaError, ValueError):
    pass


class NotCommuting(PreconditionFailed):
    pass


class NotVolumePreserving(PreconditionFailed):
    pass


class PreimageUnavailable(PreconditionFailed):
    pass


class ParseError(SemiJuliaError, ValueError):
    """Expression or config parse failure with a 1-based line/column."""

    def __init__(self, message, line=1, column=1, text=""):
        self.line = line
        self.column = column
        self.text = text
        self.message = message
        super().__init__(f"{message} at line {line}, column {column}")
