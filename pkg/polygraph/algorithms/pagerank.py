"""
PageRank with the unnormalized rule P(v) = alpha + (1 - alpha) * sum(P(u) / outdeg(u)).

Every vertex starts at 1.0. Vertices without out-edges send nothing, so their
mass is not redistributed. Fixed mode runs exactly `iterations` updates;
tolerance mode stops once no vertex moved by more than `tolerance`.
"""

from typing import Dict, List, Optional, Tuple
import logging
import math

from ..cluster import SUM_COMBINER, RunMetrics, and_aggregator
from ..config import get_settings
from ..errors import ArgumentError
from ..graph import Graph
from ..engines import EngineConfig, normalize_engine
from ..engines.gas import EdgeDirection, GasEdge, GasProgram, GasVertex, ScatterContext, run_gas_async, run_gas_sync
from ..engines.graphcentric import BlockContext, BlockProgram, BlockView, run_graph_centric
from ..engines.pact import DataflowPlan, Dataset, FieldType, execute_dag
from ..engines.pregel import ComputeContext, MasterContext, VertexHandle, VertexProgram, run_pregel
from .results import PageRankScores

logger = logging.getLogger(__name__)

MODES = ("fixed", "tolerance")
DEFAULT_ALPHA = 0.15
DEFAULT_TOLERANCE = 1e-8
DEFAULT_ITERATIONS = 30

CONVERGED = "converged"

RankState = Tuple[float, float]


def validate_parameters(alpha: float, mode: str, iterations: int, tolerance: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    if mode not in MODES:
        raise ArgumentError(f"unknown PageRank mode '{mode}', expected one of {MODES}")
    if mode == "fixed" and iterations < 1:
        raise ArgumentError(f"iterations must be at least 1, got {iterations}")
    if mode == "tolerance" and not tolerance > 0.0:
        raise ArgumentError(f"tolerance must be positive, got {tolerance}")


class _RankRule:
    """Parameters shared by the PageRank programs."""

    def __init__(self, alpha: float, mode: str, iterations: int, tolerance: float):
        self.alpha = alpha
        self.mode = mode
        self.iterations = iterations
        self.tolerance = tolerance

    @property
    def fixed(self) -> bool:
        return self.mode == "fixed"

    def update(self, total: float) -> float:
        return self.alpha + (1.0 - self.alpha) * total

    def settled(self, delta: float) -> bool:
        return abs(delta) <= self.tolerance


class PregelPageRank(_RankRule, VertexProgram):
    """
    Superstep s > 0 applies the rule to the messages of superstep s - 1.

    In tolerance mode every vertex reports whether its last update stayed
    within the tolerance; the master halts the run on the first superstep
    where all of them did.
    """

    def __init__(self, alpha: float, mode: str, iterations: int, tolerance: float, use_combiner: bool = True):
        super().__init__(alpha, mode, iterations, tolerance)
        self.combiner = SUM_COMBINER if use_combiner else None

    def aggregators(self):
        return () if self.fixed else (and_aggregator(CONVERGED, initial=False),)

    def initial_state(self, vertex: int, graph: Graph) -> RankState:
        return 1.0, 0.0

    def compute(self, vertex: VertexHandle, messages: List[float], ctx: ComputeContext) -> None:
        superstep = ctx.superstep()
        rank, delta = vertex.value
        if superstep > 0:
            new_rank = self.update(math.fsum(messages))
            rank, delta = new_rank, new_rank - rank
            vertex.value = (rank, delta)
        if not self.fixed:
            ctx.aggregate(CONVERGED, superstep > 0 and self.settled(delta))
        elif superstep >= self.iterations:
            ctx.vote_to_halt()
            return
        if vertex.num_edges:
            share = rank / vertex.num_edges
            for target in vertex.out_neighbors:
                ctx.send(target, share)

    def master_compute(self, master: MasterContext) -> None:
        if self.fixed:
            done = master.superstep >= self.iterations
        else:
            done = master.superstep >= 1 and master.get_aggregated(CONVERGED)
        if done:
            master.store["iterations"] = master.superstep
            master.halt_computation()

    def result(self, state: RankState) -> float:
        return state[0]


class GasPageRank(_RankRule, GasProgram):
    """Gathers over in-edges, scatters deltas over out-edges (delta-cache correct)."""

    gather_edges = EdgeDirection.IN
    scatter_edges = EdgeDirection.OUT
    delta_correct = True

    def initial_state(self, vertex: int, graph: Graph) -> RankState:
        return 1.0, 0.0

    def gather(self, vertex: GasVertex, edge: GasEdge) -> float:
        return edge.source_value[0] / edge.source_out_degree

    def gather_sum(self, first: float, second: float) -> float:
        return first + second

    def apply(self, vertex: GasVertex, total: Optional[float]) -> None:
        rank = vertex.value[0]
        new_rank = self.update(total or 0.0)
        vertex.value = (new_rank, new_rank - rank)
        if self.fixed or not self.settled(new_rank - rank):
            vertex.signal()

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: ScatterContext) -> None:
        delta = vertex.value[1]
        if delta != 0.0:
            ctx.post_delta(edge.target, delta / vertex.num_out_edges)
        if not self.fixed and not self.settled(delta):
            ctx.signal(edge.target)

    def result(self, state: RankState) -> float:
        return state[0]


class BlockPageRank(_RankRule, BlockProgram):
    """
    Fixed mode: Jacobi updates per superstep, boundary contributions summed by the combiner.

    Tolerance mode: a Gauss-Seidel sweep per superstep over the internal
    vertices in id order. Contributions of external in-neighbors are kept
    per (vertex, neighbor) and replaced by newer messages; a contribution is
    resent once it drifted more than the tolerance from the last value sent.
    """

    def __init__(self, alpha: float, mode: str, iterations: int, tolerance: float):
        super().__init__(alpha, mode, iterations, tolerance)
        self.combiner = SUM_COMBINER if self.fixed else None

    def initial_state(self, vertex: int, graph: Graph) -> RankState:
        return 1.0, 0.0

    def result(self, state: RankState) -> float:
        return state[0]

    def _contribution(self, block: BlockView, u: int) -> float:
        return block.value(u)[0] / block.out_degree(u)

    def _external_targets(self, block: BlockView, u: int) -> List[int]:
        return [w for w in block.out_neighbors(u) if not block.is_internal(w)]

    def compute(self, block: BlockView, messages: Dict[int, List], ctx: BlockContext) -> None:
        if self.fixed:
            self._jacobi(block, messages, ctx)
        else:
            self._sweep(block, messages, ctx)

    def _jacobi(self, block: BlockView, messages: Dict[int, List[float]], ctx: BlockContext) -> None:
        superstep = ctx.superstep()
        internal = block.internal_sorted()
        if superstep > 0:
            updates = {}
            for v in internal:
                shares = [self._contribution(block, u) for u in block.in_neighbors(v) if block.is_internal(u)]
                new_rank = self.update(math.fsum(shares + messages.get(v, [])))
                updates[v] = (new_rank, new_rank - block.value(v)[0])
            for v, state in updates.items():
                block.set_value(v, state)
        if superstep >= self.iterations:
            ctx.vote_to_halt()
            return
        for u in internal:
            targets = self._external_targets(block, u)
            if targets:
                share = self._contribution(block, u)
                for w in targets:
                    ctx.send_to_vertex(w, share)

    def _sweep(self, block: BlockView, messages: Dict[int, List[Tuple[int, float]]], ctx: BlockContext) -> None:
        internal = block.internal_sorted()
        if "external" not in block.state:
            # Replicas hold the initial ranks, which every block knows.
            block.state["external"] = {
                v: {u: self._contribution(block, u) for u in block.in_neighbors(v) if not block.is_internal(u)}
                for v in internal
            }
            block.state["last_sent"] = {
                u: self._contribution(block, u) for u in internal if self._external_targets(block, u)
            }
        external = block.state["external"]
        last_sent = block.state["last_sent"]
        for v, payloads in messages.items():
            for u, share in payloads:
                external[v][u] = share

        largest = 0.0
        for v in internal:
            shares = [self._contribution(block, u) for u in block.in_neighbors(v) if block.is_internal(u)]
            shares.extend(external[v].values())
            rank = block.value(v)[0]
            new_rank = self.update(math.fsum(shares))
            block.set_value(v, (new_rank, new_rank - rank))
            largest = max(largest, abs(new_rank - rank))

        for u, sent in last_sent.items():
            share = self._contribution(block, u)
            if abs(share - sent) > self.tolerance:
                for w in self._external_targets(block, u):
                    ctx.send_to_vertex(w, (u, share))
                last_sent[u] = share
        if largest <= self.tolerance:
            ctx.vote_to_halt()

    def master_compute(self, master: MasterContext) -> None:
        if self.fixed and master.superstep >= self.iterations:
            master.halt_computation()


def build_pagerank_plan(rule: _RankRule, max_iterations: int) -> DataflowPlan:
    """
    ranks(v, rank, delta) join links(src, dst, outdeg) -> shares(dst, rank / outdeg),
    summed per vertex, updated, then joined back to ranks for the delta.

    links carries a (v, v, 0) marker row per vertex that contributes 0.0 so
    vertices without in-edges still get a rank row.
    """
    body = DataflowPlan()
    body.source("ranks", (FieldType.ID, FieldType.SCORE, FieldType.SCORE))
    body.source("links", (FieldType.ID, FieldType.ID, FieldType.COUNT))
    body.join("shares", "ranks", "links", [0], [0],
              lambda rank, link: (link[1], rank[1] / link[2] if link[2] else 0.0),
              (FieldType.ID, FieldType.SCORE))
    body.group_by("totals", "shares", [0], "sum", value_field=1)
    body.map("updated", "totals", lambda row: [(row[0], rule.update(row[1]))], (FieldType.ID, FieldType.SCORE))
    body.join("next", "updated", "ranks", [0], [0],
              lambda new, old: (new[0], new[1], new[1] - old[1]),
              (FieldType.ID, FieldType.SCORE, FieldType.SCORE))

    if rule.fixed:
        convergence = None
    else:
        def convergence(previous: Dataset, current: Dataset) -> bool:
            return all(rule.settled(row[2]) for row in current.rows)

    plan = DataflowPlan()
    plan.source("ranks", (FieldType.ID, FieldType.SCORE, FieldType.SCORE))
    plan.source("links", (FieldType.ID, FieldType.ID, FieldType.COUNT))
    plan.bulk_iteration("iterate", "ranks", body, "ranks", "next", max_iterations,
                        convergence=convergence, static_inputs={"links": "links"})
    plan.sink("scores", "iterate")
    return plan


def pagerank_sources(graph: Graph) -> Dict[str, Dataset]:
    links = [(u, v, graph.out_degree(u)) for u in range(graph.n) for v in graph.out_neighbors[u]]
    links.extend((v, v, 0) for v in range(graph.n))
    return {
        "ranks": Dataset((FieldType.ID, FieldType.SCORE, FieldType.SCORE), [(v, 1.0, 0.0) for v in range(graph.n)]),
        "links": Dataset((FieldType.ID, FieldType.ID, FieldType.COUNT), links),
    }


def pagerank(graph: Graph, engine: str = "pregel", config: Optional[EngineConfig] = None,
             alpha: float = DEFAULT_ALPHA, mode: str = "fixed", iterations: int = DEFAULT_ITERATIONS,
             tolerance: float = DEFAULT_TOLERANCE, use_combiner: bool = True) -> Tuple[PageRankScores, RunMetrics]:
    """
    Compute PageRank scores.

    Args:
        graph: Input graph; undirected graphs are treated as both arc directions
        engine: pregel, gas-sync, gas-async (tolerance mode only), graph-centric or pact
        config: Worker layout and engine options
        alpha: Dampening factor in (0, 1)
        mode: "fixed" or "tolerance"
        iterations: Number of updates in fixed mode
        tolerance: Per-vertex delta bound in tolerance mode
        use_combiner: Sum messages per destination before sending (Pregel)

    Returns:
        Scores and run metrics
    """
    validate_parameters(alpha, mode, iterations, tolerance)
    engine = normalize_engine(engine)
    if engine == "gas-message":
        raise ArgumentError("pagerank is not available on the gas-message engine")
    if engine == "gas-async" and mode == "fixed":
        raise ArgumentError("gas-async has no global iteration count; use tolerance mode")
    config = config or EngineConfig()
    directed = graph.as_directed()
    fixed = mode == "fixed"

    if engine == "pact":
        config.check_dataflow()
        rule = _RankRule(alpha, mode, iterations, tolerance)
        max_iterations = iterations if fixed else (config.max_supersteps or get_settings().max_supersteps)
        outputs, metrics = execute_dag(build_pagerank_plan(rule, max_iterations), pagerank_sources(directed),
                                       config.parallelism)
        states: List[RankState] = [(1.0, 0.0)] * directed.n
        for v, rank, delta in outputs["scores"].rows:
            states[v] = (rank, delta)
        performed = metrics.supersteps
    else:
        assignment = config.partition(directed)
        bsp_limit = config.max_supersteps if config.max_supersteps is not None or not fixed else iterations + 1
        if engine == "pregel":
            program = PregelPageRank(alpha, mode, iterations, tolerance, use_combiner)
            states, metrics = run_pregel(directed, assignment, program,
                                         options=config.bsp_options(max_supersteps=bsp_limit))
            performed = max(metrics.supersteps - 1, 0)
        elif engine == "graph-centric":
            program = BlockPageRank(alpha, mode, iterations, tolerance)
            states, metrics = run_graph_centric(directed, assignment, program,
                                                options=config.bsp_options(max_supersteps=bsp_limit))
            performed = max(metrics.supersteps - 1, 0) if fixed else metrics.supersteps
        elif engine == "gas-sync":
            options = config.gas_options(max_iterations=iterations) if fixed else config.gas_options()
            states, metrics = run_gas_sync(directed, assignment, GasPageRank(alpha, mode, iterations, tolerance),
                                           options)
            if fixed:
                # Running out of iterations is the stopping rule here, not a failure.
                metrics.max_supersteps_reached = False
                metrics.converged = True
            performed = metrics.supersteps
        else:
            states, metrics = run_gas_async(directed, assignment, GasPageRank(alpha, mode, iterations, tolerance),
                                            config.gas_options())
            # State-changing updates expressed as full sweeps.
            performed = -(-metrics.vertex_updates // directed.n) if directed.n else 0

    scores = [rank for rank, _ in states]
    max_delta = max((abs(delta) for _, delta in states), default=0.0)
    logger.info(f"pagerank ({engine}, {mode}): iterations={performed} max_delta={max_delta:.3g}")
    return PageRankScores(scores, alpha, mode, performed, None if fixed else tolerance, max_delta), metrics
