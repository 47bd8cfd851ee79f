"""
Pregel engine: vertex-centric bulk synchronous execution.

Every superstep runs compute on each active vertex, worker by worker. Messages
sent in superstep s are delivered in s + 1; a halted vertex is woken up by an
incoming message. Aggregator values written in superstep s are readable in
s + 1, after master_compute has run.
"""

from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging

from ..cluster import Aggregator, Cluster, Combiner, RunMetrics, Worker, estimate_payload_size
from ..graph import Graph, PartitionAssignment
from .bsp import BspOptions, SuperstepDriver

logger = logging.getLogger(__name__)


class VertexHandle:
    """The vertex a compute call runs on; `value` is its mutable state."""

    __slots__ = ("id", "value", "_graph")

    def __init__(self, vertex_id: int, value: Any, graph: Graph):
        self.id = vertex_id
        self.value = value
        self._graph = graph

    @property
    def out_neighbors(self) -> Tuple[int, ...]:
        return self._graph.out_neighbors[self.id]

    @property
    def in_neighbors(self) -> Tuple[int, ...]:
        return self._graph.in_neighbors[self.id]

    @property
    def num_edges(self) -> int:
        """Out-degree (degree for undirected graphs)."""
        return len(self._graph.out_neighbors[self.id])

    def has_edge_to(self, other: int) -> bool:
        return self._graph.has_edge(self.id, other)


class ComputeContext:
    """Per-worker view of the running superstep handed to compute."""

    def __init__(self, engine: "PregelEngine", worker: Worker, superstep: int):
        self._engine = engine
        self._worker = worker
        self._superstep = superstep
        self._vertex = -1
        self.halted = False

    def bind(self, vertex: int) -> None:
        self._vertex = vertex
        self.halted = False

    def superstep(self) -> int:
        return self._superstep

    def num_vertices(self) -> int:
        return self._engine.graph.n

    @property
    def worker_id(self) -> int:
        return self._worker.id

    def send(self, dst: int, payload: Any) -> None:
        self._worker.send(dst, payload)

    def send_to_all_neighbors(self, payload: Any) -> None:
        """Out-neighbors on directed graphs, all neighbors otherwise."""
        for dst in self._engine.graph.out_neighbors[self._vertex]:
            self._worker.send(dst, payload)

    def vote_to_halt(self) -> None:
        self.halted = True

    def get_aggregated(self, name: str) -> Any:
        """Value committed at the end of the previous superstep."""
        return self._engine.cluster.aggregators.get(name)

    def aggregate(self, name: str, value: Any) -> None:
        self._worker.aggregate(name, value)


class MasterContext:
    """Master view between supersteps."""

    def __init__(self, engine: "PregelEngine", superstep: int):
        self._engine = engine
        self.superstep = superstep
        self.halted = False

    @property
    def store(self) -> Dict[str, Any]:
        """Master-side results, persisted in checkpoints."""
        return self._engine.master_store

    def num_vertices(self) -> int:
        return self._engine.graph.n

    def get_aggregated(self, name: str) -> Any:
        return self._engine.cluster.aggregators.get(name)

    def set_aggregated(self, name: str, value: Any) -> None:
        self._engine.cluster.aggregators.set(name, value)

    def halt_computation(self) -> None:
        self.halted = True


class VertexProgram(ABC):
    """Base class for Pregel vertex programs."""

    combiner: Optional[Combiner] = None

    @property
    def name(self) -> str:
        return type(self).__name__

    def aggregators(self) -> Sequence[Aggregator]:
        return ()

    @abstractmethod
    def initial_state(self, vertex: int, graph: Graph) -> Any:
        """State of a vertex before superstep 0."""

    @abstractmethod
    def compute(self, vertex: VertexHandle, messages: List[Any], ctx: ComputeContext) -> None:
        """Run one vertex for one superstep."""

    def master_compute(self, master: MasterContext) -> None:
        pass

    def result(self, state: Any) -> Any:
        """Observable output of a vertex state."""
        return state

    def payload_size(self, payload: Any) -> int:
        return estimate_payload_size(payload)


class PregelEngine(SuperstepDriver):
    """Runs a VertexProgram over a partitioned graph."""

    def __init__(self, graph: Graph, assignment: PartitionAssignment, program: VertexProgram,
                 options: Optional[BspOptions] = None):
        self.graph = graph
        self.program = program
        resolved = (options or BspOptions()).resolved()
        cluster = Cluster(
            assignment,
            aggregators=program.aggregators(),
            combiner=program.combiner,
            parallel=resolved.parallel,
            max_messages=resolved.max_messages_per_superstep,
            payload_size=program.payload_size,
        )
        super().__init__(cluster, resolved)
        self.states: List[Any] = []
        self.halted: List[bool] = []
        self.inbox: Dict[int, List[Any]] = {}
        self.master_store: Dict[str, Any] = {}

    @property
    def tag(self) -> str:
        return f"pregel-{self.program.name}"

    def initialize(self) -> None:
        self.states = [self.program.initial_state(v, self.graph) for v in range(self.graph.n)]
        self.halted = [False] * self.graph.n
        self.inbox = {}
        self.master_store = {}
        aggregators = self.cluster.aggregators
        aggregators.values = {name: aggregators.lookup(name).first_value for name in aggregators.names()}

    def num_units(self) -> int:
        return self.graph.n

    def quiescent(self) -> bool:
        return not self.inbox and all(self.halted)

    def _compute_worker(self, worker: Worker, superstep: int, inbox: Dict[int, List[Any]]) -> None:
        program = self.program
        ctx = ComputeContext(self, worker, superstep)
        active = 0
        for v in worker.vertices:
            messages = inbox.get(v)
            if self.halted[v] and not messages:
                continue
            active += 1
            vertex = VertexHandle(v, self.states[v], self.graph)
            before = program.result(vertex.value)
            ctx.bind(v)
            program.compute(vertex, messages or [], ctx)
            self.states[v] = vertex.value
            self.halted[v] = ctx.halted
            if program.result(vertex.value) != before:
                worker.count("vertex_updates")
                worker.count("state_changes")
        worker.count("active", active)
        self.check_fault(superstep, worker)

    def run_superstep(self, superstep: int) -> bool:
        inbox = self.inbox
        self.cluster.run_workers(lambda worker: self._compute_worker(worker, superstep, inbox))
        self.metrics.active_vertices_per_superstep.append(self.cluster.counter_total("active"))
        self.inbox = self.cluster.barrier()

        master = MasterContext(self, superstep)
        self.program.master_compute(master)
        return master.halted

    def snapshot_state(self) -> Dict[str, Any]:
        return {
            "states": list(self.states),
            "halted": list(self.halted),
            "inbox": {v: list(p) for v, p in self.inbox.items()},
            "master_store": dict(self.master_store),
        }

    def restore_state(self, sections: Dict[str, Any]) -> None:
        self.states = list(sections["states"])
        self.halted = list(sections["halted"])
        self.inbox = {v: list(p) for v, p in sections["inbox"].items()}
        self.master_store = dict(sections["master_store"])

    def results(self) -> List[Any]:
        return [self.program.result(state) for state in self.states]


def run_pregel(graph: Graph, assignment: PartitionAssignment, program: VertexProgram,
               max_supersteps: Optional[int] = None,
               options: Optional[BspOptions] = None) -> Tuple[List[Any], RunMetrics]:
    """
    Run a vertex program to completion.

    Args:
        graph: Input graph
        assignment: Vertex to worker mapping
        program: Vertex program
        max_supersteps: Superstep guard; overrides options.max_supersteps
        options: Engine options

    Returns:
        Final vertex states and run metrics
    """
    options = options or BspOptions()
    if max_supersteps is not None:
        options = replace(options, max_supersteps=max_supersteps)
    engine = PregelEngine(graph, assignment, program, options)
    metrics = engine.run()
    return engine.states, metrics
