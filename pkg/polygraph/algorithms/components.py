"""
Connected components by minimum-label propagation in every engine.

All variants converge to label(v) = smallest vertex id in v's component.
"""

from collections import deque
from typing import Any, Dict, List, Optional, Tuple
import logging

from ..cluster import MIN_COMBINER, RunMetrics
from ..errors import ArgumentError
from ..graph import Graph
from ..engines import EngineConfig, normalize_engine
from ..engines.gas import (
    EdgeDirection, GasEdge, GasProgram, GasVertex, MessageContext, MessageProgram, ScatterContext,
    run_gas_async, run_gas_message_api, run_gas_sync,
)
from ..engines.graphcentric import BlockContext, BlockProgram, BlockView, run_graph_centric
from ..engines.pact import DataflowPlan, Dataset, FieldType, execute_dag
from ..engines.pregel import ComputeContext, VertexHandle, VertexProgram, run_pregel
from .results import ComponentLabeling

logger = logging.getLogger(__name__)


class PregelComponents(VertexProgram):
    """Send the own id first, then forward any smaller label received."""

    combiner = MIN_COMBINER

    def __init__(self, use_combiner: bool = True):
        if not use_combiner:
            self.combiner = None

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return vertex

    def compute(self, vertex: VertexHandle, messages: List[int], ctx: ComputeContext) -> None:
        if ctx.superstep() == 0:
            ctx.send_to_all_neighbors(vertex.value)
        else:
            smallest = min(messages)
            if smallest < vertex.value:
                vertex.value = smallest
                ctx.send_to_all_neighbors(smallest)
        ctx.vote_to_halt()


class GasComponents(GasProgram):
    """State is (component, changed); neighbors are signalled only after a change."""

    gather_edges = EdgeDirection.ALL
    scatter_edges = EdgeDirection.ALL

    def initial_state(self, vertex: int, graph: Graph) -> Tuple[int, bool]:
        return vertex, False

    def gather(self, vertex: GasVertex, edge: GasEdge) -> int:
        return edge.neighbor_value[0]

    def gather_sum(self, first: int, second: int) -> int:
        return min(first, second)

    def apply(self, vertex: GasVertex, total: Optional[int]) -> None:
        component = vertex.value[0]
        if total is not None and total < component:
            vertex.value = (total, True)
        else:
            vertex.value = (component, False)

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: ScatterContext) -> None:
        component, changed = vertex.value
        if changed and edge.neighbor_value[0] > component:
            ctx.signal(edge.neighbor)

    def result(self, state: Tuple[int, bool]) -> int:
        return state[0]


class MessageComponents(MessageProgram):
    """Pregel-style components on the GAS message API."""

    combiner = MIN_COMBINER
    scatter_edges = EdgeDirection.ALL

    def initial_state(self, vertex: int, graph: Graph) -> Tuple[int, bool]:
        return vertex, False

    def apply(self, vertex: GasVertex, message: Optional[int]) -> None:
        component = vertex.value[0]
        if message is None:
            vertex.value = (component, True)
        elif message < component:
            vertex.value = (message, True)
        else:
            vertex.value = (component, False)

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: MessageContext) -> None:
        component, changed = vertex.value
        if changed:
            ctx.send(edge.neighbor, component)

    def result(self, state: Tuple[int, bool]) -> int:
        return state[0]


class BlockComponents(BlockProgram):
    """
    Sequential breadth-first search inside each block, then label exchange over boundary vertices.

    A block's local components are fixed after superstep 0; later supersteps
    only lower whole components and forward smaller labels across the
    boundary.
    """

    combiner = MIN_COMBINER

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return vertex

    def _label_components(self, block: BlockView, ctx: BlockContext) -> None:
        adjacency: Dict[int, List[int]] = {v: [] for v in block.internal_vertices | block.boundary_vertices}
        for u, v in block.edges():
            adjacency[u].append(v)
            adjacency[v].append(u)

        # Breadth-first search from members in id order, so each root is its group's minimum.
        groups: Dict[int, Dict[str, Any]] = {}
        group_of: Dict[int, int] = {}
        for root in sorted(adjacency):
            if root in group_of:
                continue
            group = groups[root] = {"internal": [], "boundary": [], "label": root}
            group_of[root] = root
            queue = deque([root])
            while queue:
                v = queue.popleft()
                group["internal" if block.is_internal(v) else "boundary"].append(v)
                for u in adjacency[v]:
                    if u not in group_of:
                        group_of[u] = root
                        queue.append(u)

        last_sent: Dict[int, int] = {}
        for root, group in groups.items():
            for v in group["internal"]:
                block.set_value(v, group["label"])
            for b in group["boundary"]:
                ctx.send_to_vertex(b, group["label"])
                last_sent[b] = group["label"]
        block.state.update(groups=groups, group_of=group_of, last_sent=last_sent)

    def compute(self, block: BlockView, messages: Dict[int, List[int]], ctx: BlockContext) -> None:
        if ctx.superstep() == 0:
            self._label_components(block, ctx)
            ctx.vote_to_halt()
            return

        groups = block.state["groups"]
        group_of = block.state["group_of"]
        last_sent = block.state["last_sent"]
        lowered = set()
        for v, payloads in sorted(messages.items()):
            root = group_of[v]
            smallest = min(payloads)
            if smallest < groups[root]["label"]:
                groups[root]["label"] = smallest
                lowered.add(root)
        for root in sorted(lowered):
            label = groups[root]["label"]
            for v in groups[root]["internal"]:
                block.set_value(v, label)
            for b in groups[root]["boundary"]:
                if label < last_sent[b]:
                    ctx.send_to_vertex(b, label)
                    last_sent[b] = label
        ctx.vote_to_halt()


def build_components_plan(max_iterations: int) -> DataflowPlan:
    """
    labels(v, l) join edges(v, w) -> candidates(w, l), min per w.

    edges holds both directions of every edge plus a (v, v) row per vertex so
    each vertex keeps its own label as a candidate.
    """
    body = DataflowPlan()
    body.source("labels", (FieldType.ID, FieldType.LABEL))
    body.source("edges", (FieldType.ID, FieldType.ID))
    body.join("candidates", "labels", "edges", [0], [0],
              lambda label, edge: (edge[1], label[1]), (FieldType.ID, FieldType.LABEL))
    body.group_by("smallest", "candidates", [0], "min", value_field=1)

    plan = DataflowPlan()
    plan.source("labels", (FieldType.ID, FieldType.LABEL))
    plan.source("edges", (FieldType.ID, FieldType.ID))
    plan.bulk_iteration("propagate", "labels", body, "labels", "smallest", max_iterations,
                        convergence="unchanged", static_inputs={"edges": "edges"})
    plan.sink("components", "propagate")
    return plan


def components_sources(graph: Graph) -> Dict[str, Dataset]:
    arcs = [(u, v) for u, row in enumerate(graph.out_neighbors) for v in row]
    arcs.extend((v, v) for v in range(graph.n))
    return {
        "labels": Dataset((FieldType.ID, FieldType.LABEL), [(v, v) for v in range(graph.n)]),
        "edges": Dataset((FieldType.ID, FieldType.ID), arcs),
    }


def connected_components(graph: Graph, engine: str = "pregel",
                         config: Optional[EngineConfig] = None,
                         use_combiner: bool = True) -> Tuple[ComponentLabeling, RunMetrics]:
    """
    Label every vertex with the smallest id in its connected component.

    Args:
        graph: Undirected graph (symmetrize directed input first)
        engine: One of the engine names
        config: Worker layout and engine options
        use_combiner: Pregel only; disable the min combiner

    Returns:
        Component labels and run metrics
    """
    if graph.directed:
        raise ArgumentError("connected components need an undirected graph; symmetrize it first")
    engine = normalize_engine(engine)
    config = config or EngineConfig()

    if engine == "pact":
        config.check_dataflow()
        max_iterations = config.max_supersteps or max(graph.n, 1) + 1
        outputs, metrics = execute_dag(build_components_plan(max_iterations), components_sources(graph),
                                       config.parallelism)
        labels = list(range(graph.n))
        for v, label in outputs["components"].rows:
            labels[v] = label
        return ComponentLabeling(labels), metrics

    assignment = config.partition(graph)
    if engine == "pregel":
        states, metrics = run_pregel(graph, assignment, PregelComponents(use_combiner),
                                     options=config.bsp_options())
        labels = list(states)
    elif engine == "graph-centric":
        states, metrics = run_graph_centric(graph, assignment, BlockComponents(), options=config.bsp_options())
        labels = list(states)
    elif engine == "gas-sync":
        states, metrics = run_gas_sync(graph, assignment, GasComponents(), config.gas_options())
        labels = [component for component, _ in states]
    elif engine == "gas-async":
        states, metrics = run_gas_async(graph, assignment, GasComponents(), config.gas_options())
        labels = [component for component, _ in states]
    else:
        states, metrics = run_gas_message_api(graph, assignment, MessageComponents(), "sync",
                                              config.gas_options())
        labels = [component for component, _ in states]
    logger.info(f"connected components ({engine}): {len(set(labels))} components")
    return ComponentLabeling(labels), metrics
