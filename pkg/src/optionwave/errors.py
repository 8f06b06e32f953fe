"""Exception hierarchy shared by the library and the command line."""


class OptionWaveError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(OptionWaveError, ValueError):
    """Bad arguments: wrong shapes, too-small grids, indices out of range."""

    exit_code = 2


class DomainError(OptionWaveError, ValueError):
    """A parameter lies outside the validity domain of a formula."""

    exit_code = 3


class ValidationError(OptionWaveError, ValueError):
    """Input data failed validation (malformed CSV, ragged grid, negative price)."""

    exit_code = 3


class NumericError(OptionWaveError, ArithmeticError):
    """Numerical failure, e.g. singular normal equations at every damping level."""

    exit_code = 4
