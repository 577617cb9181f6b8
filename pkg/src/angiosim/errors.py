"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, the numerical
family -> 3. Everything else is a plain bug and escapes as-is.
"""


class AngiosimError(Exception):
    """Base class for package errors."""


class ConfigError(AngiosimError):
    """Invalid configuration, file format, or argument usage."""


class NumericalError(AngiosimError):
    """A solver produced non-finite values or violated a stability bound."""


class TransportError(NumericalError):
    """Transport-specific numerical failure (CFL violation, bad grid)."""


class CalibrationError(NumericalError):
    """Calibration failed to converge; carries the last iterate when available."""

    def __init__(self, message, last_result=None):
        super().__init__(message)
        self.last_result = last_result
