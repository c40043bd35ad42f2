"""Exception types raised across the package."""


class GbhtError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(GbhtError, ValueError):
    pass


class DimensionMismatchError(GbhtError, ValueError):
    pass


class InsufficientDataError(GbhtError, ValueError):
    pass


class DegenerateDataError(GbhtError, ValueError):
    """Raised when the data has zero spread (all rows identical)."""


class InvariantError(GbhtError, RuntimeError):
    """An internal invariant was violated (indicates a bug or corrupt state)."""


class SchemaError(GbhtError, ValueError):
    pass


class CsvParseError(GbhtError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
