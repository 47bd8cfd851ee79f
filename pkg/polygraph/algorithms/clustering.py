"""
Clustering coefficients: exact triangle counting and a sampling estimate.

For a vertex v with deg(v) >= 2 (the set V'), delta(v) is the number of
triangles through v and tau(v) = deg(v) * (deg(v) - 1) / 2 the number of
neighbor pairs. The local coefficient is delta / tau, the average local
coefficient is its mean over V' and the global coefficient is
sum(delta) / sum(tau), i.e. 3 * triangles / connected triplets.

Exact counting ships whole neighborhoods over the edges, so its traffic
grows with n * d_max^2.
"""

from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math
import operator

import numpy as np

from ..cluster import CONCAT_COMBINER, RunMetrics, sum_aggregator
from ..errors import ArgumentError
from ..graph import Graph
from ..engines import EngineConfig, normalize_engine
from ..engines.gas import (
    EdgeDirection, EdgeStore, GasEdge, GasProgram, GasVertex, MessageContext, MessageProgram, ScatterContext,
    map_reduce_vertices, run_gas_message_api, run_gas_sync,
)
from ..engines.graphcentric import BlockContext, BlockProgram, BlockView, run_graph_centric
from ..engines.pact import DataflowPlan, Dataset, FieldType, execute_dag
from ..engines.pregel import ComputeContext, MasterContext, PregelEngine, VertexHandle, VertexProgram, run_pregel
from .results import ClusteringResult

logger = logging.getLogger(__name__)

TARGETS = ("average_local", "global")

TRIANGLES = "actual"
PAIRS = "possible"


def pair_count(degree: int) -> int:
    return degree * (degree - 1) // 2


def summarize(graph: Graph, deltas: Sequence[int]) -> ClusteringResult:
    """Coefficients from per-vertex triangle counts."""
    local: Dict[int, float] = {}
    for v in range(graph.n):
        tau = pair_count(graph.degree(v))
        if tau:
            local[v] = deltas[v] / tau
    total_delta = sum(deltas)
    triplets = sum(pair_count(graph.degree(v)) for v in range(graph.n))
    return ClusteringResult(
        local=local,
        average_local=math.fsum(local.values()) / len(local) if local else 0.0,
        global_coefficient=total_delta / triplets if triplets else 0.0,
        triangles=total_delta // 3,
        triplets=triplets,
    )


def _common(first: Sequence[int], second: Sequence[int]) -> int:
    return len(set(first).intersection(second))


class PregelTriangles(VertexProgram):
    """
    Superstep 0: every vertex sends its neighborhood over each edge.
    Superstep 1: each triangle shows up twice in the intersections, once per other corner.
    """

    def aggregators(self):
        return (sum_aggregator(TRIANGLES), sum_aggregator(PAIRS))

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return 0

    def compute(self, vertex: VertexHandle, messages: List[Tuple[int, ...]], ctx: ComputeContext) -> None:
        if ctx.superstep() == 0:
            ctx.send_to_all_neighbors(tuple(vertex.out_neighbors))
        else:
            own = set(vertex.out_neighbors)
            vertex.value = sum(len(own.intersection(neighborhood)) for neighborhood in messages) // 2
            ctx.aggregate(TRIANGLES, vertex.value)
            ctx.aggregate(PAIRS, pair_count(len(own)))
        ctx.vote_to_halt()

    def master_compute(self, master: MasterContext) -> None:
        if master.superstep == 1:
            master.store["triangles"] = master.get_aggregated(TRIANGLES) // 3
            master.store["triplets"] = master.get_aggregated(PAIRS)


class NeighborhoodPhase(GasProgram):
    """First GAS phase: collect N(v), then store |N(u) & N(v)| on every edge."""

    gather_edges = EdgeDirection.ALL
    scatter_edges = EdgeDirection.ALL

    def initial_state(self, vertex: int, graph: Graph) -> frozenset:
        return frozenset()

    def gather(self, vertex: GasVertex, edge: GasEdge) -> frozenset:
        return frozenset((edge.neighbor,))

    def gather_sum(self, first: frozenset, second: frozenset) -> frozenset:
        return first | second

    def apply(self, vertex: GasVertex, total: Optional[frozenset]) -> None:
        vertex.value = total or frozenset()

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: ScatterContext) -> None:
        edge.data = len(vertex.value & edge.neighbor_value)


class TrianglePhase(GasProgram):
    """Second GAS phase: delta(v) is half the edge values around v."""

    gather_edges = EdgeDirection.ALL
    scatter_edges = EdgeDirection.NONE

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return 0

    def gather(self, vertex: GasVertex, edge: GasEdge) -> int:
        return edge.data

    def gather_sum(self, first: int, second: int) -> int:
        return first + second

    def apply(self, vertex: GasVertex, total: Optional[int]) -> None:
        vertex.value = (total or 0) // 2


class BlockTriangles(BlockProgram):
    """
    Blocks ship the neighborhoods of their internal vertices once to every
    other block owning a neighbor, then count locally.
    """

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return 0

    def compute(self, block: BlockView, messages: Dict[int, List[Tuple[int, Tuple[int, ...]]]],
                ctx: BlockContext) -> None:
        internal = block.internal_sorted()
        if ctx.superstep() == 0:
            for v in internal:
                neighborhood = tuple(block.out_neighbors(v))
                # One representative boundary vertex per receiving block.
                receivers: Dict[int, int] = {}
                for u in neighborhood:
                    if not block.is_internal(u):
                        owner = block.owner(u)
                        receivers[owner] = min(u, receivers.get(owner, u))
                for dst in receivers.values():
                    ctx.send_to_vertex(dst, (v, neighborhood))
            if block.boundary_vertices:
                return
        known = {v: block.out_neighbors(v) for v in internal}
        for payloads in messages.values():
            for u, neighborhood in payloads:
                known[u] = neighborhood
        for v in internal:
            own = known[v]
            block.set_value(v, sum(_common(own, known[u]) for u in own) // 2)
        ctx.vote_to_halt()


def build_triangle_plan() -> DataflowPlan:
    """
    E join E on dst = src gives wedges (a, b, c); wedges whose ends are joined
    by an edge are closed. Each triangle closes two wedges per corner.
    """
    plan = DataflowPlan()
    plan.source("edges", (FieldType.ID, FieldType.ID))
    plan.join("paths", "edges", "edges", [1], [0],
              lambda first, second: (first[0], first[1], second[1]), (FieldType.ID, FieldType.ID, FieldType.ID))
    plan.map("wedges", "paths", lambda row: [row] if row[0] != row[2] else [],
             (FieldType.ID, FieldType.ID, FieldType.ID))
    plan.join("closed", "wedges", "edges", [0, 2], [0, 1], lambda wedge, _: (wedge[1],), (FieldType.ID,))
    plan.group_by("corners", "closed", [0], "count")
    plan.sink("triangles", "corners")
    return plan


def _require_undirected(graph: Graph) -> None:
    if graph.directed:
        raise ArgumentError("clustering coefficients need an undirected graph; symmetrize it first")


def clustering_exact(graph: Graph, engine: str = "pregel",
                     config: Optional[EngineConfig] = None) -> Tuple[ClusteringResult, RunMetrics]:
    """
    Exact local, average and global clustering coefficients.

    Args:
        graph: Undirected simple graph
        engine: pregel, gas-sync, graph-centric or pact
        config: Worker layout and engine options

    Returns:
        Coefficients with triangle and triplet counts, and run metrics
    """
    _require_undirected(graph)
    engine = normalize_engine(engine)
    config = config or EngineConfig()

    if engine == "pregel":
        runner = PregelEngine(graph, config.partition(graph), PregelTriangles(), config.bsp_options())
        metrics = runner.run()
        deltas = list(runner.states)
        result = summarize(graph, deltas)
        if "triangles" in runner.master_store:
            result.triangles = runner.master_store["triangles"]
            result.triplets = runner.master_store["triplets"]
    elif engine == "gas-sync":
        assignment = config.partition(graph)
        edge_store = EdgeStore(graph)
        _, first = run_gas_sync(graph, assignment, NeighborhoodPhase(), config.gas_options(), edge_store)
        deltas, second = run_gas_sync(graph, assignment, TrianglePhase(), config.gas_options(), edge_store)
        metrics = first.merge(second)
        result = summarize(graph, deltas)
        result.triangles = map_reduce_vertices(deltas, lambda delta: delta, operator.add, 0) // 3
    elif engine == "graph-centric":
        deltas, metrics = run_graph_centric(graph, config.partition(graph), BlockTriangles(),
                                            options=config.bsp_options())
        result = summarize(graph, deltas)
    elif engine == "pact":
        config.check_dataflow()
        arcs = [(u, v) for u in range(graph.n) for v in graph.out_neighbors[u]]
        outputs, metrics = execute_dag(build_triangle_plan(),
                                       {"edges": Dataset((FieldType.ID, FieldType.ID), arcs)},
                                       config.parallelism)
        deltas = [0] * graph.n
        for v, closed in outputs["triangles"].rows:
            deltas[v] = closed // 2
        result = summarize(graph, deltas)
    else:
        raise ArgumentError(f"exact clustering is not available on the {engine} engine")
    logger.info(f"clustering ({engine}): triangles={result.triangles} average_local={result.average_local:.6f}")
    return result, metrics


def sample_vertices(graph: Graph, target: str, samples: int, seed: int) -> np.ndarray:
    """Number of samples drawn at every vertex: uniform over V' or proportional to deg * (deg - 1)."""
    if target not in TARGETS:
        raise ArgumentError(f"unknown clustering target '{target}', expected one of {TARGETS}")
    if samples < 1:
        raise ArgumentError(f"samples must be at least 1, got {samples}")
    if seed < 0:
        raise ArgumentError(f"seed must be non-negative, got {seed}")
    degrees = np.array([graph.degree(v) for v in range(graph.n)], dtype=np.int64)
    eligible = degrees >= 2
    if not eligible.any():
        raise ArgumentError("no vertex has two or more neighbors; the clustering coefficient is undefined")
    weights = eligible.astype(float) if target == "average_local" else (degrees * (degrees - 1)).astype(float)
    rng = np.random.default_rng(seed)
    return rng.multinomial(samples, weights / weights.sum())


def draw_pairs(graph: Graph, vertex: int, count: int, seed: int) -> List[Tuple[int, int]]:
    """`count` uniformly drawn pairs of distinct neighbors, from a per-vertex stream."""
    if count == 0:
        return []
    neighbors = graph.out_neighbors[vertex]
    rng = np.random.default_rng([seed, vertex])
    first = rng.integers(0, len(neighbors), size=count)
    second = rng.integers(0, len(neighbors) - 1, size=count)
    second = second + (second >= first)
    return [(neighbors[i], neighbors[j]) for i, j in zip(first.tolist(), second.tolist())]


def _queries(graph: Graph, counts: np.ndarray, seed: int, vertex: int) -> Dict[int, Tuple[int, ...]]:
    """Membership queries of one vertex grouped by the neighbor that answers them."""
    grouped: Dict[int, List[int]] = {}
    for a, b in draw_pairs(graph, vertex, int(counts[vertex]), seed):
        grouped.setdefault(a, []).append(b)
    return {a: tuple(bs) for a, bs in grouped.items()}


class PregelSampling(VertexProgram):
    """Sampled vertices ask one neighbor per pair whether the other one is adjacent."""

    combiner = CONCAT_COMBINER

    def __init__(self, graph: Graph, counts: np.ndarray, seed: int):
        self.graph = graph
        self.counts = counts
        self.seed = seed

    def initial_state(self, vertex: int, graph: Graph) -> int:
        return 0

    def compute(self, vertex: VertexHandle, messages: List[Tuple[int, ...]], ctx: ComputeContext) -> None:
        if ctx.superstep() == 0:
            if self.counts[vertex.id]:
                for target, asked in _queries(self.graph, self.counts, self.seed, vertex.id).items():
                    ctx.send(target, asked)
        else:
            neighbors = set(vertex.out_neighbors)
            vertex.value += sum(1 for queries in messages for b in queries if b in neighbors)
        ctx.vote_to_halt()


class MessageSampling(MessageProgram):
    """
    Message-API variant. State is (queries by neighbor, hits); queries are
    sent on the first activation and cleared when answers arrive.
    """

    combiner = CONCAT_COMBINER
    scatter_edges = EdgeDirection.ALL

    def __init__(self, graph: Graph, counts: np.ndarray, seed: int):
        self.graph = graph
        self.counts = counts
        self.seed = seed

    def initial_state(self, vertex: int, graph: Graph) -> Tuple[Dict[int, Tuple[int, ...]], int]:
        return (_queries(graph, self.counts, self.seed, vertex) if self.counts[vertex] else {}), 0

    def apply(self, vertex: GasVertex, message: Optional[Tuple[int, ...]]) -> None:
        if message is None:
            return
        answered = sum(1 for b in message if self.graph.has_edge(vertex.id, b))
        vertex.value = ({}, vertex.value[1] + answered)

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: MessageContext) -> None:
        asked = vertex.value[0].get(edge.neighbor)
        if asked:
            ctx.send(edge.neighbor, asked)

    def result(self, state: Tuple[Dict[int, Tuple[int, ...]], int]) -> int:
        return state[1]


def clustering_approx(graph: Graph, target: str = "average_local", samples: int = 10000, seed: int = 0,
                      engine: str = "pregel",
                      config: Optional[EngineConfig] = None) -> Tuple[ClusteringResult, RunMetrics]:
    """
    Estimate the average local or the global clustering coefficient by sampling neighbor pairs.

    Args:
        graph: Undirected graph with at least one vertex of degree two
        target: "average_local" or "global"
        samples: Number of sampled pairs
        seed: Sampling seed
        engine: pregel or gas-sync (message API)
        config: Worker layout and engine options

    Returns:
        Result with samples, hits and the estimate hits / samples, and run metrics
    """
    _require_undirected(graph)
    engine = normalize_engine(engine)
    config = config or EngineConfig()
    counts = sample_vertices(graph, target, samples, seed)

    if engine == "pregel":
        states, metrics = run_pregel(graph, config.partition(graph), PregelSampling(graph, counts, seed),
                                     options=config.bsp_options())
        hits = sum(states)
    elif engine in ("gas-sync", "gas-message"):
        sampled = [v for v in range(graph.n) if counts[v]]
        states, metrics = run_gas_message_api(graph, config.partition(graph), MessageSampling(graph, counts, seed),
                                              "sync", config.gas_options(initial_active=sampled))
        hits = sum(hit for _, hit in states)
    else:
        raise ArgumentError(f"approximate clustering is not available on the {engine} engine")
    result = ClusteringResult(target=target, samples=samples, hits=hits)
    logger.info(f"clustering estimate ({engine}, {target}): {result.estimate:.6f} from {samples} samples")
    return result, metrics
