"""
Exception hierarchy for polygraph.

Every error raised by the engines derives from PolygraphError and carries the
process exit code the command-line front end uses when it surfaces the error.
"""

from typing import Any, Optional


class PolygraphError(Exception):
    """Base class for all polygraph errors."""

    exit_code = 1


class ArgumentError(PolygraphError, ValueError):
    """An argument is outside the domain an operation accepts."""


class ConfigurationError(PolygraphError):
    """Engine, aggregator or settings configuration is inconsistent."""


class EdgeListParseError(PolygraphError, ValueError):
    """A data line of an edge list could not be parsed."""

    exit_code = 2

    def __init__(self, line_number: int, line: str, reason: str):
        self.line_number = line_number
        self.line = line
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}: {line!r}")


class RoutingError(PolygraphError):
    """A message or signal was addressed to a vertex that does not exist."""

    exit_code = 3

    def __init__(self, message: str, envelope: Optional[Any] = None):
        self.envelope = envelope
        super().__init__(message)


class ContractViolationError(PolygraphError):
    """A program broke the access contract of its programming model."""

    exit_code = 3


class PlanValidationError(PolygraphError):
    """A dataflow plan is malformed (arity, key types, cycles)."""

    exit_code = 3


class CheckpointError(PolygraphError):
    """A checkpoint could not be written."""


class RestoreError(PolygraphError):
    """A checkpoint file could not be restored."""


class WorkerFailure(PolygraphError):
    """A simulated worker died; the driver recovers from the last checkpoint."""

    def __init__(self, worker: int, superstep: int):
        self.worker = worker
        self.superstep = superstep
        super().__init__(f"worker {worker} failed in superstep {superstep}")


class ResourceLimitError(PolygraphError):
    """A configured resource guard was exceeded."""

    exit_code = 4
