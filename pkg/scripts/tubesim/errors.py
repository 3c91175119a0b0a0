# errors.py

"""
Exception types shared by the tubesim scripts.

The dispatcher maps each family to a process exit code:

    ConfigError        -> 2
    GeometryError      -> 3
    SimulationError    -> 4
    AcceptanceFailure  -> 5
"""

from __future__ import annotations


class TubeSimError(Exception):
    """Base class for every error raised on purpose by tubesim."""

    exit_code: int = 1


class ConfigError(TubeSimError, ValueError):
    """The experiment config cannot be parsed or references unknown ids."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GeometryError(TubeSimError, ValueError):
    """Infeasible domain, violated scaling assumption or unsupported model."""

    exit_code = 3


class SimulationError(TubeSimError, RuntimeError):
    """A trajectory or an ensemble could not be produced."""

    exit_code = 4


class AcceptanceFailure(TubeSimError):
    """At least one report verdict failed in strict mode."""

    exit_code = 5


class TrajectoryCensored(SimulationError):
    """A trajectory hit its step cap before the requested event."""

    def __init__(self, message: str, steps: int):
        self.steps = steps
        super().__init__(message)
