"""
Shared superstep driver for the synchronous engines.

Subclasses supply one superstep plus state snapshot/restore; the driver owns
the barrier loop, halting, the superstep guard, periodic checkpoints and
recovery from injected worker failures.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional
import logging
import time

from ..cluster import Cluster, RunMetrics, Worker
from ..cluster.checkpoint import Checkpoint, CheckpointManager, FaultInjector, read_checkpoint
from ..config import resolve
from ..errors import ArgumentError, ResourceLimitError, WorkerFailure

logger = logging.getLogger(__name__)

# Counters that describe the run as a whole and survive a restore.
_RUN_LEVEL_METRICS = ("recoveries", "checkpoints_written")


@dataclass
class BspOptions:
    """Per-run options; unset limits fall back to polygraph settings."""
    max_supersteps: Optional[int] = None
    parallel: bool = False
    checkpoint_every: Optional[int] = None
    checkpoint_dir: Optional[Path] = None
    strict_checkpoints: Optional[bool] = None
    kill_at_superstep: Optional[int] = None
    kill_worker: int = 0
    resume_from: Optional[Path] = None
    max_messages_per_superstep: Optional[int] = None

    def resolved(self) -> "BspOptions":
        options = replace(
            self,
            max_supersteps=resolve(self.max_supersteps, "max_supersteps"),
            checkpoint_dir=Path(resolve(self.checkpoint_dir, "checkpoint_dir")),
            strict_checkpoints=resolve(self.strict_checkpoints, "strict_checkpoints"),
            max_messages_per_superstep=resolve(self.max_messages_per_superstep, "max_messages_per_superstep"),
        )
        if options.max_supersteps < 1:
            raise ArgumentError(f"max_supersteps must be at least 1, got {options.max_supersteps}")
        if options.checkpoint_every is not None and options.checkpoint_every < 1:
            raise ArgumentError(f"checkpoint interval must be at least 1, got {options.checkpoint_every}")
        return options


class SuperstepDriver(ABC):
    """Barrier loop shared by the Pregel and graph-centric engines."""

    def __init__(self, cluster: Cluster, options: Optional[BspOptions] = None):
        self.cluster = cluster
        self.options = (options or BspOptions()).resolved()
        self.metrics: RunMetrics = cluster.metrics
        self.checkpoints = CheckpointManager(
            self.tag, self.options.checkpoint_every, self.options.checkpoint_dir,
            strict=self.options.strict_checkpoints,
        )
        self.faults = FaultInjector(self.options.kill_at_superstep, self.options.kill_worker)

    @property
    @abstractmethod
    def tag(self) -> str:
        """Identifies engine and program in checkpoint files."""

    @abstractmethod
    def initialize(self) -> None:
        """Reset to the state before superstep 0."""

    @abstractmethod
    def num_units(self) -> int:
        """Number of schedulable units (vertices or blocks)."""

    @abstractmethod
    def quiescent(self) -> bool:
        """True when every unit has halted and no message is in flight."""

    @abstractmethod
    def run_superstep(self, superstep: int) -> bool:
        """Execute one superstep through its barrier; returns True if the master halted the run."""

    @abstractmethod
    def snapshot_state(self) -> Dict[str, Any]:
        """Engine state to persist at a barrier."""

    @abstractmethod
    def restore_state(self, sections: Dict[str, Any]) -> None:
        """Inverse of snapshot_state."""

    def check_fault(self, superstep: int, worker: Worker) -> None:
        self.faults.check(superstep, worker.id)

    def snapshot(self) -> Dict[str, Any]:
        sections = self.snapshot_state()
        sections["aggregators"] = dict(self.cluster.aggregators.values)
        sections["metrics"] = self.metrics.to_dict()
        return sections

    def _load_metrics(self, values: Dict[str, Any]) -> None:
        keep = {name: getattr(self.metrics, name) for name in _RUN_LEVEL_METRICS}
        for name, value in values.items():
            setattr(self.metrics, name, list(value) if isinstance(value, list) else value)
        for name, value in keep.items():
            setattr(self.metrics, name, value)

    def restore(self, checkpoint: Checkpoint) -> int:
        """Load a checkpoint; returns the superstep to resume at."""
        self.restore_state(checkpoint.sections)
        self.cluster.aggregators.values = dict(checkpoint.sections["aggregators"])
        self._load_metrics(checkpoint.sections["metrics"])
        return checkpoint.superstep

    def _restart(self) -> int:
        self.initialize()
        self._load_metrics(RunMetrics().to_dict())
        return 0

    def run(self) -> RunMetrics:
        start = time.perf_counter()
        self.initialize()
        superstep = 0
        if self.options.resume_from is not None:
            superstep = self.restore(read_checkpoint(self.options.resume_from, expected_tag=self.tag))
            logger.info(f"Resumed {self.tag} at superstep {superstep}")

        while True:
            if (superstep > 0 or self.num_units() == 0) and self.quiescent():
                break
            if superstep >= self.options.max_supersteps:
                self.metrics.max_supersteps_reached = True
                logger.warning(f"{self.tag}: stopped after max_supersteps={self.options.max_supersteps}")
                break
            self.cluster.begin_superstep()
            try:
                halted = self.run_superstep(superstep)
            except WorkerFailure as failure:
                self.metrics.recoveries += 1
                checkpoint = self.checkpoints.latest()
                if checkpoint is None:
                    logger.warning(f"{failure}; no checkpoint, restarting from superstep 0")
                    superstep = self._restart()
                else:
                    logger.warning(f"{failure}; recovering from checkpoint at superstep {checkpoint.superstep}")
                    superstep = self.restore(checkpoint)
                continue
            except MemoryError as e:
                raise ResourceLimitError(f"{self.tag} ran out of memory in superstep {superstep}") from e

            superstep += 1
            self.metrics.supersteps = superstep
            logger.debug(
                f"{self.tag} superstep {superstep - 1}: sent={self.metrics.messages_sent} "
                f"delivered={self.metrics.messages_delivered}"
            )
            if self.checkpoints.maybe_save(superstep, self.snapshot) is not None:
                self.metrics.checkpoints_written += 1
            if halted:
                break

        self.metrics.converged = not self.metrics.max_supersteps_reached
        self.metrics.wall_time = time.perf_counter() - start
        logger.info(
            f"{self.tag} finished: supersteps={self.metrics.supersteps} "
            f"messages_sent={self.metrics.messages_sent} vertex_updates={self.metrics.vertex_updates}"
        )
        return self.metrics
