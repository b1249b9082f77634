"""Exception hierarchy shared by the library and the CLI."""


class FdaError(Exception):
    """Base class for all package errors."""


class DataError(FdaError, ValueError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class NumericalError(FdaError, ArithmeticError):
    """Divergence or non-finite values during fitting (CLI exit code 3)."""
