"""Exception hierarchy shared by every mgstd module."""


class MgstdError(Exception):
    """Base class for all errors raised by mgstd."""


class ParameterError(MgstdError, ValueError):
    """A parameter is outside its admissible range."""


class DomainError(MgstdError, ValueError):
    """A point lies outside the grid domain."""


class DataError(MgstdError, ValueError):
    """A dataset is malformed or degenerate."""


class ParseError(DataError):
    """An input file could not be parsed.

    ``row`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class IntegrationError(MgstdError, ArithmeticError):
    """An SDE integration produced a non-finite state."""


class SelectionError(MgstdError):
    """A parameter-selection procedure found no admissible value."""

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve
