"""
Graph-centric engine: one compute call per partition block per superstep.

A block reads and writes its internal vertices directly, so changes are seen
immediately within the same compute call. Boundary vertices are read-only
replicas holding the value the vertex had when the run started; they are
never refreshed. A block learns about changes on the other side of a cut
only from the messages sent to its internal vertices, and it writes to a
boundary vertex only by sending a message to the owning block.
"""

from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple
import logging

from ..cluster import Aggregator, Cluster, Combiner, RunMetrics, Worker, estimate_payload_size
from ..errors import ContractViolationError
from ..graph import BlockSubgraph, Graph, PartitionAssignment, build_block_subgraph
from .bsp import BspOptions, SuperstepDriver
from .pregel import MasterContext

logger = logging.getLogger(__name__)


class BlockView:
    """A block's window on the vertex states."""

    def __init__(self, engine: "GraphCentricEngine", subgraph: BlockSubgraph):
        self._engine = engine
        self.subgraph = subgraph

    @property
    def block(self) -> int:
        return self.subgraph.block

    @property
    def internal_vertices(self) -> FrozenSet[int]:
        return self.subgraph.internal_vertices

    @property
    def boundary_vertices(self) -> FrozenSet[int]:
        return self.subgraph.boundary_vertices

    @property
    def state(self) -> Dict[str, Any]:
        """Block-private bookkeeping that persists across supersteps."""
        return self._engine.block_states[self.block]

    def internal_sorted(self) -> List[int]:
        return sorted(self.subgraph.internal_vertices)

    def is_internal(self, v: int) -> bool:
        return v in self.subgraph.internal_vertices

    def value(self, v: int) -> Any:
        """Live value of an internal vertex; the start-of-run value for a boundary vertex.

        Boundary replicas are never refreshed, so programs track neighbor
        changes from their incoming messages.
        """
        if v in self.subgraph.internal_vertices:
            return self._engine.states[v]
        if v in self.subgraph.boundary_vertices:
            return self._engine.replicas[v]
        raise ContractViolationError(f"vertex {v} is not part of block {self.block}")

    def set_value(self, v: int, value: Any) -> None:
        if v not in self.subgraph.internal_vertices:
            raise ContractViolationError(f"block {self.block} cannot write vertex {v}: only internal vertices are writable")
        self._engine.states[v] = value

    def out_neighbors(self, v: int) -> Tuple[int, ...]:
        return self._engine.graph.out_neighbors[v] if v in self.subgraph.internal_vertices else ()

    def in_neighbors(self, v: int) -> Tuple[int, ...]:
        return self._engine.graph.in_neighbors[v] if v in self.subgraph.internal_vertices else ()

    def out_degree(self, v: int) -> int:
        return self._engine.graph.out_degree(v)

    def owner(self, v: int) -> int:
        """Block that owns v."""
        return self._engine.cluster.owner(v)

    def edges(self) -> List[Tuple[int, int]]:
        return self.subgraph.edges()


class BlockContext:
    """Superstep services for one block."""

    def __init__(self, engine: "GraphCentricEngine", worker: Worker, view: BlockView, superstep: int):
        self._engine = engine
        self._worker = worker
        self._view = view
        self._superstep = superstep
        self.halted = False

    def superstep(self) -> int:
        return self._superstep

    def num_vertices(self) -> int:
        return self._engine.graph.n

    def send_to_vertex(self, dst: int, payload: Any) -> None:
        """Deliver payload to the block owning dst in the next superstep."""
        if self._view.is_internal(dst):
            raise ContractViolationError(f"vertex {dst} is internal to block {self._view.block}; update it directly")
        self._worker.send(dst, payload)

    def vote_to_halt(self) -> None:
        self.halted = True

    def get_aggregated(self, name: str) -> Any:
        return self._engine.cluster.aggregators.get(name)

    def aggregate(self, name: str, value: Any) -> None:
        self._worker.aggregate(name, value)


class BlockProgram(ABC):
    """Base class for graph-centric programs."""

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
    def compute(self, block: BlockView, messages: Dict[int, List[Any]], ctx: BlockContext) -> None:
        """Run one block for one superstep; messages are grouped by target internal vertex."""

    def master_compute(self, master: MasterContext) -> None:
        pass

    def result(self, state: Any) -> Any:
        return state

    def payload_size(self, payload: Any) -> int:
        return estimate_payload_size(payload)


class GraphCentricEngine(SuperstepDriver):
    """Runs a BlockProgram with one block per worker."""

    def __init__(self, graph: Graph, assignment: PartitionAssignment, program: BlockProgram,
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
        self.blocks = [build_block_subgraph(graph, assignment, b) for b in range(assignment.k)]
        self.states: List[Any] = []
        self.replicas: Dict[int, Any] = {}
        self.block_states: List[Dict[str, Any]] = []
        self.halted: List[bool] = []
        self.inbox: Dict[int, List[Any]] = {}
        self.master_store: Dict[str, Any] = {}

    @property
    def tag(self) -> str:
        return f"graphcentric-{self.program.name}"

    def initialize(self) -> None:
        self.states = [self.program.initial_state(v, self.graph) for v in range(self.graph.n)]
        self.replicas = {}
        for subgraph in self.blocks:
            for v in subgraph.boundary_vertices:
                self.replicas.setdefault(v, self.states[v])
        self.block_states = [{} for _ in self.blocks]
        self.halted = [not subgraph.internal_vertices for subgraph in self.blocks]
        self.inbox = {}
        self.master_store = {}
        aggregators = self.cluster.aggregators
        aggregators.values = {name: aggregators.lookup(name).first_value for name in aggregators.names()}

    def num_units(self) -> int:
        return sum(1 for subgraph in self.blocks if subgraph.internal_vertices)

    def quiescent(self) -> bool:
        return not self.inbox and all(self.halted)

    def _compute_block(self, worker: Worker, superstep: int, inbox: Dict[int, List[Any]]) -> None:
        subgraph = self.blocks[worker.id]
        internal = sorted(subgraph.internal_vertices)
        messages = {v: inbox[v] for v in internal if v in inbox}
        if self.halted[worker.id] and not messages:
            return
        before = [self.program.result(self.states[v]) for v in internal]
        view = BlockView(self, subgraph)
        ctx = BlockContext(self, worker, view, superstep)
        self.program.compute(view, messages, ctx)
        self.halted[worker.id] = ctx.halted
        changed = sum(1 for v, old in zip(internal, before) if self.program.result(self.states[v]) != old)
        worker.count("vertex_updates", changed)
        worker.count("state_changes", changed)
        worker.count("active", len(internal))
        self.check_fault(superstep, worker)

    def run_superstep(self, superstep: int) -> bool:
        inbox = self.inbox
        self.cluster.run_workers(lambda worker: self._compute_block(worker, superstep, inbox))
        self.metrics.active_vertices_per_superstep.append(self.cluster.counter_total("active"))
        self.inbox = self.cluster.barrier()

        master = MasterContext(self, superstep)
        self.program.master_compute(master)
        return master.halted

    def snapshot_state(self) -> Dict[str, Any]:
        return {
            "states": list(self.states),
            "block_states": [dict(state) for state in self.block_states],
            "halted": list(self.halted),
            "inbox": {v: list(p) for v, p in self.inbox.items()},
            "master_store": dict(self.master_store),
        }

    def restore_state(self, sections: Dict[str, Any]) -> None:
        self.states = list(sections["states"])
        self.block_states = [dict(state) for state in sections["block_states"]]
        self.halted = list(sections["halted"])
        self.inbox = {v: list(p) for v, p in sections["inbox"].items()}
        self.master_store = dict(sections["master_store"])

    def results(self) -> List[Any]:
        return [self.program.result(state) for state in self.states]


def run_graph_centric(graph: Graph, assignment: PartitionAssignment, program: BlockProgram,
                      max_supersteps: Optional[int] = None,
                      options: Optional[BspOptions] = None) -> Tuple[List[Any], RunMetrics]:
    """Run a block program to completion; returns (states, metrics)."""
    options = options or BspOptions()
    if max_supersteps is not None:
        options = replace(options, max_supersteps=max_supersteps)
    engine = GraphCentricEngine(graph, assignment, program, options)
    metrics = engine.run()
    return engine.states, metrics
