"""Exception hierarchy. Each class carries the CLI exit code for its error class."""


class LabError(Exception):
    exit_code = 1


class ConfigError(LabError, ValueError):
    exit_code = 2


class NumericalError(LabError, ArithmeticError):
    exit_code = 3


class EscapeError(NumericalError):
    """Orbit left the escape box. ``step`` is the first iterate outside it."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class GeometryError(LabError):
    exit_code = 4


class IncompleteEnumerationError(LabError):
    exit_code = 5

    def __init__(self, message: str, missing=()):
        super().__init__(message)
        self.missing = list(missing)
