"""
File: errors.py
Path: trajsim/errors.py
Purpose: Exception hierarchy shared by the simulator, loaders and command line
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

from typing import Optional


class TrajsimError(Exception):
    """Base class for every error raised by trajsim."""


class ContractError(TrajsimError, ValueError):
    """A caller broke a precondition (length mismatch, invalid parameters)."""


class UsageError(TrajsimError):
    """Bad command-line flags, config file keys or referenced paths."""


class InputError(TrajsimError, ValueError):
    """Input data is unusable (non-finite values, empty histories, exhausted replay)."""


class ScenarioFormatError(InputError):
    """
    A scenario, rollout or proposals file could not be parsed.

    Attributes:
        field: Dotted path of the offending field, e.g. ``agents[1].history[3]``
        line: Line number reported by the JSON decoder, when known
    """

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        parts = [message]
        if field:
            parts.append(f"field: {field}")
        if line is not None:
            parts.append(f"line: {line}")
        super().__init__(" | ".join(parts))


class SchemaVersionError(ScenarioFormatError):
    """The file declares a schema_version this build does not read."""


class NumericalError(TrajsimError, ArithmeticError):
    """Energies or solver state became non-finite."""


class SimulationError(TrajsimError):
    """
    Error raised inside the closed-loop outer loop, annotated with its position.

    Attributes:
        sample: Sample index k
        step: 1-based simulation step t at which the failing MPS call started
        cause: The wrapped error, also available from worker processes
    """

    def __init__(self, message: str, sample: int, step: int, cause: Optional[BaseException] = None):
        self.message = message
        self.sample = sample
        self.step = step
        self.cause = cause
        super().__init__(f"{message} (sample {sample}, step {step})")

    def __reduce__(self):
        return type(self), (self.message, self.sample, self.step, self.cause)
