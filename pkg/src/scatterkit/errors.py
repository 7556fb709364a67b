"""Exception types raised across scatterkit.

The CLI maps each family onto a stable exit code (see ``scatterkit.cli``).
"""


class ScatterkitError(Exception):
    """Base class for every error raised by this package."""


# -- input / schema (CLI exit 2) ---------------------------------------------

class InputError(ScatterkitError):
    pass


class InvalidSceneError(InputError):
    pass


class ParameterError(InputError, ValueError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class SchemaError(ParseError):
    pass


class AlignmentError(InputError):
    pass


# -- simulation (CLI exit 3) -------------------------------------------------

class SimulationError(ScatterkitError):
    pass


class GeometryError(SimulationError, ValueError):
    pass


class ConvergenceError(SimulationError):
    def __init__(self, message, g=None):
        self.g = g
        super().__init__(message)


class SpanError(SimulationError):
    pass


class EmptyProfileError(SimulationError):
    pass


# -- calibration (CLI exit 4) ------------------------------------------------

class CalibrationError(ScatterkitError):
    def __init__(self, message, bins=()):
        self.bins = tuple(bins)
        super().__init__(message)
