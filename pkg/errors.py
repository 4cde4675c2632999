# errors.py  ──  exception hierarchy shared by the library and the CLI
# Library code raises these; only cli.py turns them into exit codes.

from typing import Any


class DeepSplineError(Exception):
    """Base class. `exit_code` is what the CLI returns when it catches one."""

    exit_code: int = 2


class SplineError(DeepSplineError, ValueError):
    pass


class InfeasibleProblemError(DeepSplineError, ValueError):
    pass


class ShapeError(DeepSplineError, ValueError):
    pass


class DataFormatError(DeepSplineError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ModelFileError(DeepSplineError, ValueError):
    pass


class ConvergenceError(DeepSplineError, RuntimeError):
    """Solver stopped before meeting its tolerance; `best` holds the best iterate."""

    def __init__(self, message: str, best: Any = None):
        self.best = best
        super().__init__(message)


class TrainingDivergedError(DeepSplineError, RuntimeError):
    exit_code = 3


class ConversionMismatchError(DeepSplineError, RuntimeError):
    exit_code = 4
