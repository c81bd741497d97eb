from typing import Optional, Sequence


class PyBailoutError(Exception):
    """Base class for every error raised by pybailout."""


class NetworkValidationError(PyBailoutError, ValueError):
    """The liability data does not describe a valid financial network."""

    def __init__(self, message: str, nodes: Sequence[int] = ()):
        super().__init__(message)
        self.nodes = list(nodes)


class ShockError(PyBailoutError, ValueError):
    """A shock vector or distribution lies outside [0, c]."""


class ConvergenceError(PyBailoutError):
    """The clearing iteration did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class LPSolverError(PyBailoutError):
    """The LP backend returned without an optimal solution."""

    def __init__(self, message: str, status: int = -1):
        super().__init__(message)
        self.status = status


class ObjectiveError(PyBailoutError, ValueError):
    pass


class BruteForceCapError(PyBailoutError):
    pass


class DegenerateFairnessError(PyBailoutError, ValueError):
    """A Gini-type coefficient has a zero denominator."""


class DisconnectedGraphError(PyBailoutError, ValueError):
    pass


class InstanceFormatError(PyBailoutError, ValueError):
    """An instance file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class BankTableError(PyBailoutError, ValueError):
    pass


class GeneratorError(PyBailoutError, ValueError):
    pass


class ConfigError(PyBailoutError, ValueError):
    pass
