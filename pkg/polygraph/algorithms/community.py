"""
Community detection by label propagation.

Each vertex starts with the label of a neighbor drawn from its own seeded
stream (isolated vertices keep their own id) and repeatedly adopts the most
frequent label among its neighbors, the smallest one on ties. Synchronous
engines may oscillate and then stop at max_rounds with converged=False;
the run records a per-round digest of all labels so the oscillation
period can be reported.
"""

from collections import Counter
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple
import logging

import numpy as np

from ..cluster import Aggregator, RunMetrics, or_aggregator
from ..errors import ArgumentError
from ..graph import Graph
from ..graph.hashing import MASK64, hash_pair
from ..engines import EngineConfig, normalize_engine
from ..engines.gas import EdgeDirection, GasEdge, GasProgram, GasVertex, ScatterContext, run_gas_async, run_gas_sync
from ..engines.graphcentric import BlockContext, BlockProgram, BlockView, GraphCentricEngine
from ..engines.pact import DataflowPlan, Dataset, FieldType, execute_dag
from ..engines.pregel import ComputeContext, MasterContext, PregelEngine, VertexHandle, VertexProgram
from .results import CommunityLabeling

logger = logging.getLogger(__name__)

DEFAULT_MAX_ROUNDS = 100

CHANGED = "changed"
DIGEST = "label_digest"


def digest_aggregator() -> Aggregator:
    return Aggregator(DIGEST, 0, lambda a, b: (a + b) & MASK64)


def initial_label(graph: Graph, vertex: int, seed: int) -> int:
    """Label of a uniformly drawn neighbor, from the per-vertex stream (seed, vertex)."""
    neighbors = graph.out_neighbors[vertex]
    if not neighbors:
        return vertex
    rng = np.random.default_rng([seed, vertex])
    return neighbors[int(rng.integers(0, len(neighbors)))]


def most_frequent_label(current: int, counts: Mapping[int, int]) -> int:
    """Smallest of the most frequent labels; `current` when there are no neighbors."""
    if not counts:
        return current
    best = max(counts.values())
    return min(label for label, count in counts.items() if count == best)


def label_digest(labels: Sequence[int], vertices: Optional[Sequence[int]] = None) -> int:
    """Order-independent hash of (vertex, label) pairs; vertices default to 0..len-1."""
    total = 0
    for v, label in zip(vertices if vertices is not None else range(len(labels)), labels):
        total = (total + hash_pair(v, label)) & MASK64
    return total


def detect_period(digests: Sequence[int]) -> Optional[int]:
    """Smallest p such that the last p digests repeat the p before them."""
    for period in range(1, len(digests) // 2 + 1):
        if list(digests[-period:]) == list(digests[-2 * period:-period]):
            return period
    return None


def satisfies_fixpoint(graph: Graph, labels: Sequence[int]) -> bool:
    """True if every vertex with neighbors holds one of its neighborhood's most frequent labels."""
    for v in range(graph.n):
        neighbors = graph.out_neighbors[v]
        if not neighbors:
            continue
        counts = Counter(labels[u] for u in neighbors)
        if counts.get(labels[v], 0) != max(counts.values()):
            return False
    return True


class PregelLabelPropagation(VertexProgram):
    """Synchronous rounds; every vertex resends its label each round so receivers see full counts."""

    def __init__(self, seed: int, max_rounds: int):
        self.seed = seed
        self.max_rounds = max_rounds

    def aggregators(self):
        return (or_aggregator(CHANGED), digest_aggregator())

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return initial_label(graph, vertex, self.seed)

    def compute(self, vertex: VertexHandle, messages: List[int], ctx: ComputeContext) -> None:
        label = vertex.value
        if ctx.superstep() > 0:
            label = most_frequent_label(vertex.value, Counter(messages))
            ctx.aggregate(CHANGED, label != vertex.value)
            vertex.value = label
        if vertex.num_edges:
            ctx.aggregate(DIGEST, hash_pair(vertex.id, label))
        ctx.send_to_all_neighbors(label)
        ctx.vote_to_halt()

    def master_compute(self, master: MasterContext) -> None:
        master.store.setdefault("digests", []).append(master.get_aggregated(DIGEST))
        if master.superstep == 0:
            return
        master.store["rounds"] = master.superstep
        if not master.get_aggregated(CHANGED):
            master.store["converged"] = True
            master.halt_computation()
        elif master.superstep >= self.max_rounds:
            master.store["converged"] = False
            master.halt_computation()


class GasLabelPropagation(GasProgram):
    """State is (label, changed); changed vertices signal all neighbors."""

    gather_edges = EdgeDirection.ALL
    scatter_edges = EdgeDirection.ALL

    def __init__(self, seed: int):
        self.seed = seed

    def initial_state(self, vertex: int, graph: Graph) -> Tuple[int, bool]:
        return initial_label(graph, vertex, self.seed), False

    def gather(self, vertex: GasVertex, edge: GasEdge) -> Counter:
        return Counter({edge.neighbor_value[0]: 1})

    def gather_sum(self, first: Counter, second: Counter) -> Counter:
        return first + second

    def apply(self, vertex: GasVertex, total: Optional[Counter]) -> None:
        label = vertex.value[0]
        new_label = most_frequent_label(label, total or {})
        vertex.value = (new_label, new_label != label)

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: ScatterContext) -> None:
        if vertex.value[1]:
            ctx.signal(edge.neighbor)

    def result(self, state: Tuple[int, bool]) -> int:
        return state[0]


class BlockLabelPropagation(BlockProgram):
    """
    Synchronous rounds inside each block.

    Labels of external neighbors are cached per block, seeded from the
    replicas, and only changed labels cross the boundary. Every internal
    vertex of a block is updated from the labels of the previous round, so
    the labeling does not depend on the partitioning.
    """

    def __init__(self, seed: int):
        self.seed = seed

    def aggregators(self):
        return (digest_aggregator(),)

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return initial_label(graph, vertex, self.seed)

    def compute(self, block: BlockView, messages: Dict[int, List[Tuple[int, int]]], ctx: BlockContext) -> None:
        internal = block.internal_sorted()
        if "external" not in block.state:
            block.state["external"] = {u: block.value(u) for u in block.boundary_vertices}
            ctx.aggregate(DIGEST, label_digest([block.value(v) for v in internal], internal))
        external = block.state["external"]
        for payloads in messages.values():
            for u, label in payloads:
                external[u] = label

        def label_of(u: int) -> int:
            return block.value(u) if block.is_internal(u) else external[u]

        updates = {}
        for v in internal:
            counts = Counter(label_of(u) for u in block.out_neighbors(v))
            new_label = most_frequent_label(block.value(v), counts)
            if new_label != block.value(v):
                updates[v] = new_label

        delta = 0
        for v, new_label in updates.items():
            delta = (delta + hash_pair(v, new_label) - hash_pair(v, block.value(v))) & MASK64
            block.set_value(v, new_label)
            for w in block.out_neighbors(v):
                if not block.is_internal(w):
                    ctx.send_to_vertex(w, (v, new_label))
        ctx.aggregate(DIGEST, delta)
        if not updates:
            ctx.vote_to_halt()

    def master_compute(self, master: MasterContext) -> None:
        digests = master.store.setdefault("digests", [])
        previous = digests[-1] if digests else 0
        digests.append((previous + master.get_aggregated(DIGEST)) & MASK64)


def build_label_propagation_plan(max_rounds: int,
                                 convergence: Callable[[Dataset, Dataset], bool]) -> DataflowPlan:
    """
    labels(v, l) join edges(v, w) -> received(w, l), counted per (w, l), joined
    with w's current label and reduced per w by the most-frequent rule.
    """
    def choose(key, rows):
        counts = {label: count for _, label, count, _ in rows}
        yield key[0], most_frequent_label(rows[0][3], counts)

    body = DataflowPlan()
    body.source("labels", (FieldType.ID, FieldType.LABEL))
    body.source("edges", (FieldType.ID, FieldType.ID))
    body.join("received", "labels", "edges", [0], [0],
              lambda label, edge: (edge[1], label[1]), (FieldType.ID, FieldType.LABEL))
    body.group_by("counts", "received", [0, 1], "count")
    body.join("candidates", "counts", "labels", [0], [0],
              lambda count, label: (count[0], count[1], count[2], label[1]),
              (FieldType.ID, FieldType.LABEL, FieldType.COUNT, FieldType.LABEL))
    body.reduce("chosen", "candidates", [0], choose, (FieldType.ID, FieldType.LABEL))

    plan = DataflowPlan()
    plan.source("labels", (FieldType.ID, FieldType.LABEL))
    plan.source("edges", (FieldType.ID, FieldType.ID))
    plan.bulk_iteration("propagate", "labels", body, "labels", "chosen", max_rounds,
                        convergence=convergence, static_inputs={"edges": "edges"})
    plan.sink("communities", "propagate")
    return plan


def _dataset_digest(dataset: Dataset, labels: List[int]) -> int:
    current = list(labels)
    for v, label in dataset.rows:
        current[v] = label
    return label_digest(current)


def _run_dataflow(graph: Graph, config: EngineConfig, seed: int,
                  max_rounds: int) -> Tuple[List[int], RunMetrics, List[int]]:
    config.check_dataflow()
    labels = [initial_label(graph, v, seed) for v in range(graph.n)]
    digests = [label_digest(labels)]

    def unchanged(previous: Dataset, current: Dataset) -> bool:
        digests.append(_dataset_digest(current, labels))
        return previous.multiset() == current.multiset()

    active = [v for v in range(graph.n) if graph.out_neighbors[v]]
    sources = {
        "labels": Dataset((FieldType.ID, FieldType.LABEL), [(v, labels[v]) for v in active]),
        "edges": Dataset((FieldType.ID, FieldType.ID),
                         [(u, v) for u in active for v in graph.out_neighbors[u]]),
    }
    outputs, metrics = execute_dag(build_label_propagation_plan(max_rounds, unchanged), sources,
                                   config.parallelism)
    for v, label in outputs["communities"].rows:
        labels[v] = label
    return labels, metrics, digests


def _run_pregel(graph: Graph, config: EngineConfig, seed: int,
                max_rounds: int) -> Tuple[List[int], RunMetrics, List[int], int]:
    engine = PregelEngine(graph, config.partition(graph), PregelLabelPropagation(seed, max_rounds),
                          config.bsp_options(max_supersteps=max_rounds + 1))
    metrics = engine.run()
    store = engine.master_store
    # A run that goes quiet on its own (no vertex has neighbors) is converged.
    metrics.converged = store.get("converged", True) and not metrics.max_supersteps_reached
    return list(engine.states), metrics, store.get("digests", []), store.get("rounds", 0)


def _run_blocks(graph: Graph, config: EngineConfig, seed: int,
                max_rounds: int) -> Tuple[List[int], RunMetrics, List[int]]:
    engine = GraphCentricEngine(graph, config.partition(graph), BlockLabelPropagation(seed),
                                config.bsp_options(max_supersteps=max_rounds))
    metrics = engine.run()
    return list(engine.states), metrics, engine.master_store.get("digests", [])


def community_detection_lp(graph: Graph, engine: str = "pregel", config: Optional[EngineConfig] = None,
                           seed: int = 0,
                           max_rounds: int = DEFAULT_MAX_ROUNDS) -> Tuple[CommunityLabeling, RunMetrics]:
    """
    Label propagation community detection.

    Args:
        graph: Undirected graph
        engine: pregel, gas-sync, gas-async, graph-centric or pact
        config: Worker layout and engine options
        seed: Seed of the initial neighbor choice
        max_rounds: Round limit for the synchronous engines

    Returns:
        Labeling (with converged flag, rounds and oscillation period) and run metrics;
        metrics.converged mirrors the labeling's flag
    """
    if graph.directed:
        raise ArgumentError("community detection needs an undirected graph; symmetrize it first")
    if max_rounds < 1:
        raise ArgumentError(f"max_rounds must be at least 1, got {max_rounds}")
    if seed < 0:
        raise ArgumentError(f"seed must be non-negative, got {seed}")
    engine = normalize_engine(engine)
    if engine == "gas-message":
        raise ArgumentError("community detection is not available on the gas-message engine")
    config = config or EngineConfig()
    digests: List[int] = []
    rounds = 0

    if engine == "pact":
        labels, metrics, digests = _run_dataflow(graph, config, seed, max_rounds)
        rounds = metrics.supersteps
    elif engine == "pregel":
        labels, metrics, digests, rounds = _run_pregel(graph, config, seed, max_rounds)
    elif engine == "graph-centric":
        labels, metrics, digests = _run_blocks(graph, config, seed, max_rounds)
        rounds = metrics.supersteps
    elif engine == "gas-sync":
        digests.append(label_digest([initial_label(graph, v, seed) for v in range(graph.n)]))
        options = config.gas_options(
            max_iterations=max_rounds,
            observer=lambda _, states: digests.append(label_digest([label for label, _ in states])),
        )
        states, metrics = run_gas_sync(graph, config.partition(graph), GasLabelPropagation(seed), options)
        labels = [label for label, _ in states]
        rounds = metrics.supersteps
    else:
        states, metrics = run_gas_async(graph, config.partition(graph), GasLabelPropagation(seed),
                                        config.gas_options())
        labels = [label for label, _ in states]

    period = None
    if not metrics.converged:
        period = detect_period(digests)
        if period is not None and period < 2:
            period = None
        logger.warning(f"label propagation ({engine}) did not converge in {max_rounds} rounds"
                       + (f"; labels oscillate with period {period}" if period else ""))
    return CommunityLabeling(labels, metrics.converged, rounds, period), metrics
