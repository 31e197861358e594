"""Exception hierarchy shared across the toolkit."""


class CwefsError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CwefsError, ValueError):
    """Invalid experiment configuration or parameter value."""


class DataError(CwefsError, ValueError):
    """Malformed or inconsistent input data."""


class DimensionMismatchError(DataError):
    """A file's matrix shape disagrees with the rest of the dataset."""

    def __init__(self, path, expected, found):
        self.path = str(path)
        self.expected = expected
        self.found = found
        super().__init__(
            f"{self.path}: expected {expected} columns, found {found}"
        )


class ParseError(DataError):
    """A CSV cell could not be read as a finite number."""

    def __init__(self, path, row, column, value):
        self.path = str(path)
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"{self.path}: row {row}, column {column}: "
            f"cannot parse {value!r} as a finite number"
        )


class NumericalError(CwefsError, ArithmeticError):
    """The solver produced a non-finite value."""
