"""Exception hierarchy shared by the library and the command-line front-end."""


class TdaError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(TdaError, ValueError):
    """Invalid configuration or parameter combination."""

    exit_code = 2


class DataError(TdaError, ValueError):
    """Malformed or non-finite input data."""

    exit_code = 3


class NumericalGuardError(TdaError, RuntimeError):
    """A computation was refused because it would be degenerate or too large."""

    exit_code = 4
