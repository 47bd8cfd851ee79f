"""
Execution engines for the four programming models.

EngineConfig carries what every engine needs besides the program: how the
graph is split over simulated workers and the per-engine options.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional
import logging

from ..errors import ArgumentError
from ..graph import Graph, PartitionAssignment, partition_hash, partition_range
from .bsp import BspOptions, SuperstepDriver
from .gas import GasOptions

logger = logging.getLogger(__name__)

ENGINES = ("pregel", "gas-sync", "gas-async", "gas-message", "graph-centric", "pact")
PARTITIONERS = ("hash", "range")

_ALIASES = {
    "gas": "gas-sync",
    "graphcentric": "graph-centric",
    "dataflow": "pact",
}


def normalize_engine(name: str) -> str:
    """Canonical engine name; accepts underscores and a few aliases."""
    key = name.strip().lower().replace("_", "-")
    key = _ALIASES.get(key, key)
    if key not in ENGINES:
        raise ArgumentError(f"unknown engine '{name}', expected one of {', '.join(ENGINES)}")
    return key


@dataclass
class EngineConfig:
    """Worker layout and engine options for one algorithm run."""
    workers: int = 1
    partitioner: str = "hash"
    partition_seed: int = 0
    assignment: Optional[PartitionAssignment] = None
    parallel: bool = False
    max_supersteps: Optional[int] = None
    max_updates: Optional[int] = None
    checkpoint_every: Optional[int] = None
    checkpoint_dir: Optional[Path] = None
    strict_checkpoints: Optional[bool] = None
    kill_at_superstep: Optional[int] = None
    kill_worker: int = 0
    resume_from: Optional[Path] = None
    delta_caching: bool = False
    verify_cache: bool = False
    schedule: str = "sequential"
    schedule_seed: int = 0

    def partition(self, graph: Graph) -> PartitionAssignment:
        if self.assignment is not None:
            if self.assignment.n != graph.n:
                raise ArgumentError(f"assignment covers {self.assignment.n} vertices, graph has {graph.n}")
            return self.assignment
        if self.workers < 1:
            raise ArgumentError(f"worker count must be positive, got {self.workers}")
        if self.partitioner == "hash":
            return partition_hash(graph, self.workers, self.partition_seed)
        if self.partitioner == "range":
            return partition_range(graph, self.workers)
        raise ArgumentError(f"unknown partitioner '{self.partitioner}', expected one of {PARTITIONERS}")

    @property
    def parallelism(self) -> int:
        """Data partitions per dataflow operator."""
        return self.assignment.k if self.assignment is not None else self.workers

    def bsp_options(self, **overrides) -> BspOptions:
        values = dict(
            max_supersteps=self.max_supersteps,
            parallel=self.parallel,
            checkpoint_every=self.checkpoint_every,
            checkpoint_dir=self.checkpoint_dir,
            strict_checkpoints=self.strict_checkpoints,
            kill_at_superstep=self.kill_at_superstep,
            kill_worker=self.kill_worker,
            resume_from=self.resume_from,
        )
        values.update(overrides)
        return BspOptions(**values)

    def gas_options(self, **overrides) -> GasOptions:
        if self.checkpoint_every is not None or self.kill_at_superstep is not None or self.resume_from is not None:
            raise ArgumentError("checkpointing and fault injection are only supported by pregel and graph-centric")
        values = dict(
            max_iterations=self.max_supersteps,
            max_updates=self.max_updates,
            delta_caching=self.delta_caching,
            verify_cache=self.verify_cache,
            parallel=self.parallel,
            schedule=self.schedule,
            seed=self.schedule_seed,
        )
        values.update(overrides)
        return GasOptions(**values)

    def check_dataflow(self) -> None:
        if self.checkpoint_every is not None or self.kill_at_superstep is not None or self.resume_from is not None:
            raise ArgumentError("checkpointing and fault injection are only supported by pregel and graph-centric")


__all__ = [
    "ENGINES",
    "PARTITIONERS",
    "EngineConfig",
    "normalize_engine",
    "BspOptions",
    "GasOptions",
    "SuperstepDriver",
]
