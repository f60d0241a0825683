"""Exception hierarchy shared by the library and the command-line frontend."""


class GiniMDSError(Exception):
    """Base class for all package errors."""


class InvalidInputError(GiniMDSError, ValueError):
    """Input array is malformed (non-finite, wrong shape, length mismatch)."""


class InvalidParameterError(GiniMDSError, ValueError):
    """A hyperparameter lies outside its admissible range."""


class InvalidConfigError(GiniMDSError, ValueError):
    """A combination of settings cannot be honoured for the given data."""


class DegenerateInputError(GiniMDSError, ValueError):
    """Input is well formed but leaves a quantity undefined (zero variance, zero distances)."""


class DataParseError(GiniMDSError, ValueError):
    """A data file could not be parsed; carries the offending location."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NumericError(GiniMDSError, ArithmeticError):
    """A numerical routine failed (eigensolver, non-finite iterate)."""
