"""Exception hierarchy shared by the pipeline stages."""


class HeatLoadError(Exception):
    """Base class for all pipeline errors."""


class InputError(HeatLoadError, ValueError):
    """An argument or record violates its declared domain."""


class ParseError(InputError):
    """A CSV file could not be parsed.

    ``line`` is the 1-based physical line number (header is line 1), or None
    for file-level problems such as a missing header.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class EmptySegmentError(HeatLoadError):
    """No regression rows survive the segment and lag-availability filters."""

    def __init__(self, message, cause):
        self.cause = cause
        super().__init__(message)


class InsufficientDataError(HeatLoadError):
    """Fewer observations than parameters."""


class NumericalError(HeatLoadError, ArithmeticError):
    """A numerical routine failed to produce a usable result."""
