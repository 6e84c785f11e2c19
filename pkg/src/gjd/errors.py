"""Exception hierarchy shared by every module."""


class GJDError(Exception):
    """Base class for all package errors."""


class ValidationError(GJDError, ValueError):
    """Input violates a documented precondition."""


class DomainError(ValidationError):
    """Argument lies outside the mathematical domain of a function."""


class ParseError(ValidationError):
    """Malformed input file row."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class OverdispersionError(ValidationError):
    """Count data are not overdispersed, so the negative binomial fit is undefined."""


class ConvergenceError(GJDError, ArithmeticError):
    """A numerical routine stopped before meeting its tolerance."""

    def __init__(self, message, estimate=None, bound=None):
        self.estimate = estimate
        self.bound = bound
        super().__init__(message)


class StageError(GJDError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
