"""
Gather-Apply-Scatter engines.

A GasProgram is split into gather (read-only, per edge), gather_sum
(associative and commutative), apply (the only place vertex state changes)
and scatter (read-only, signals neighbors and posts deltas). The synchronous
engine runs the three phases over the active set with a barrier after each;
the asynchronous engine pulls vertices from a FIFO queue and runs the whole
gather/apply/scatter unit at once, making its writes visible immediately.
"""

from abc import ABC, abstractmethod
from collections import Counter, deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple
import logging
import threading
import time

import numpy as np

from ..cluster import Cluster, Combiner, RunMetrics, estimate_payload_size
from ..config import resolve
from ..errors import ArgumentError, ContractViolationError, RoutingError
from ..graph import Graph, PartitionAssignment

logger = logging.getLogger(__name__)

SCHEDULES = ("sequential", "shuffled")


class EdgeDirection(str, Enum):
    """Which edges a gather or scatter phase visits."""
    NONE = "none"
    IN = "in"
    OUT = "out"
    ALL = "all"


class EdgeStore:
    """Per-edge attachment slots; an undirected edge has one slot shared by both endpoints."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self._data: Dict[int, Any] = {}

    def slot(self, source: int, target: int) -> int:
        if not self.graph.directed and source > target:
            source, target = target, source
        return self.graph.edge_id(source, target)

    def get(self, slot: int, default: Any = None) -> Any:
        return self._data.get(slot, default)

    def set(self, slot: int, value: Any) -> None:
        self._data[slot] = value

    def __len__(self) -> int:
        return len(self._data)


@dataclass
class GasOptions:
    """Engine options; unset limits fall back to polygraph settings."""
    max_iterations: Optional[int] = None
    max_updates: Optional[int] = None
    delta_caching: bool = False
    verify_cache: bool = False
    parallel: bool = False
    schedule: str = "sequential"
    seed: int = 0
    initial_active: Optional[Sequence[int]] = None
    record_applies: bool = False
    max_messages_per_superstep: Optional[int] = None
    # Called with (iteration, states) after every synchronous iteration.
    observer: Optional[Callable[[int, List[Any]], None]] = None

    def resolved(self) -> "GasOptions":
        if self.schedule not in SCHEDULES:
            raise ArgumentError(f"unknown schedule '{self.schedule}', expected one of {SCHEDULES}")
        return replace(
            self,
            max_iterations=resolve(self.max_iterations, "max_supersteps"),
            max_updates=resolve(self.max_updates, "max_async_updates"),
            max_messages_per_superstep=resolve(self.max_messages_per_superstep, "max_messages_per_superstep"),
        )


class GasVertex:
    """
    Vertex view passed to program phases.

    Only the view handed to apply is writable; gather and scatter get a
    read-only view and assigning `value` there raises ContractViolationError.
    """

    __slots__ = ("id", "_value", "_graph", "_writable", "signalled")

    def __init__(self, vertex_id: int, value: Any, graph: Graph, writable: bool = False):
        self.id = vertex_id
        self._value = value
        self._graph = graph
        self._writable = writable
        self.signalled = False

    @property
    def value(self) -> Any:
        return self._value

    @value.setter
    def value(self, new_value: Any) -> None:
        if not self._writable:
            raise ContractViolationError(f"vertex {self.id} is read-only outside apply")
        self._value = new_value

    @property
    def num_out_edges(self) -> int:
        return len(self._graph.out_neighbors[self.id])

    @property
    def num_in_edges(self) -> int:
        return len(self._graph.in_neighbors[self.id])

    @property
    def num_edges(self) -> int:
        return self._graph.degree(self.id)

    def signal(self) -> None:
        """Reschedule this vertex (apply only)."""
        if not self._writable:
            raise ContractViolationError("a vertex can only reschedule itself from apply")
        self.signalled = True


class GasEdge:
    """An edge seen from `center`, the vertex whose phase is running."""

    __slots__ = ("source", "target", "center", "_runner")

    def __init__(self, runner: "_GasRunner", source: int, target: int, center: int):
        self.source = source
        self.target = target
        self.center = center
        self._runner = runner

    @property
    def neighbor(self) -> int:
        return self.target if self.center == self.source else self.source

    @property
    def source_value(self) -> Any:
        return self._runner.states[self.source]

    @property
    def target_value(self) -> Any:
        return self._runner.states[self.target]

    @property
    def neighbor_value(self) -> Any:
        return self._runner.states[self.neighbor]

    @property
    def source_out_degree(self) -> int:
        return len(self._runner.graph.out_neighbors[self.source])

    @property
    def slot(self) -> int:
        return self._runner.edge_store.slot(self.source, self.target)

    @property
    def data(self) -> Any:
        return self._runner.edge_store.get(self.slot)

    @data.setter
    def data(self, value: Any) -> None:
        self._runner.edge_store.set(self.slot, value)


class ScatterContext:
    """Collects the signals and posted deltas of a scatter phase."""

    def __init__(self, num_vertices: int, on_signal: Callable[[int], None],
                 on_delta: Callable[[int, Any], None]):
        self._n = num_vertices
        self._on_signal = on_signal
        self._on_delta = on_delta

    def _check(self, target: int) -> None:
        if not 0 <= target < self._n:
            raise RoutingError(f"signal to nonexistent vertex {target}", target)

    def signal(self, target: int) -> None:
        self._check(target)
        self._on_signal(target)

    def post_delta(self, target: int, delta: Any) -> None:
        self._check(target)
        self._on_delta(target, delta)


class GasProgram(ABC):
    """Base class for gather-apply-scatter vertex programs."""

    gather_edges: EdgeDirection = EdgeDirection.ALL
    scatter_edges: EdgeDirection = EdgeDirection.ALL
    # Cached aggregate plus posted deltas equals a fresh gather.
    delta_correct: bool = False

    @property
    def name(self) -> str:
        return type(self).__name__

    @abstractmethod
    def initial_state(self, vertex: int, graph: Graph) -> Any:
        """init(vertex)."""

    def gather(self, vertex: GasVertex, edge: GasEdge) -> Any:
        return None

    def gather_sum(self, first: Any, second: Any) -> Any:
        raise NotImplementedError(f"{self.name} gathers but defines no gather_sum")

    @abstractmethod
    def apply(self, vertex: GasVertex, total: Optional[Any]) -> None:
        """Update vertex.value from the gathered total (None when nothing was gathered)."""

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: ScatterContext) -> None:
        pass

    def result(self, state: Any) -> Any:
        return state


def _difference(first: Any, second: Any) -> float:
    if first is None or second is None:
        return 0.0 if first is second else float("inf")
    try:
        return abs(float(first) - float(second))
    except (TypeError, ValueError):
        return 0.0 if first == second else float("inf")


class _GasRunner:
    """State and phase helpers shared by the GAS engines."""

    def __init__(self, graph: Graph, assignment: PartitionAssignment, program: GasProgram,
                 options: Optional[GasOptions] = None, edge_store: Optional[EdgeStore] = None):
        self.graph = graph
        self.assignment = assignment
        self.program = program
        self.options = (options or GasOptions()).resolved()
        self.cluster = Cluster(assignment, parallel=self.options.parallel)
        self.metrics: RunMetrics = self.cluster.metrics
        self.edge_store = edge_store or EdgeStore(graph)
        self.states: List[Any] = [program.initial_state(v, graph) for v in range(graph.n)]
        self.caching = self.options.delta_caching and program.delta_correct
        self.cache: Dict[int, Any] = {}
        self.pending: Dict[int, Any] = {}
        self._error_lock = threading.Lock()
        if self.options.delta_caching and not program.delta_correct:
            logger.info(f"{program.name} is not delta-correct; delta caching disabled")

    def edges_of(self, v: int, direction: EdgeDirection) -> List[Tuple[int, int]]:
        if direction is EdgeDirection.NONE:
            return []
        if not self.graph.directed:
            return [(v, u) for u in self.graph.out_neighbors[v]]
        edges: List[Tuple[int, int]] = []
        if direction in (EdgeDirection.IN, EdgeDirection.ALL):
            edges.extend((u, v) for u in self.graph.in_neighbors[v])
        if direction in (EdgeDirection.OUT, EdgeDirection.ALL):
            edges.extend((v, u) for u in self.graph.out_neighbors[v])
        return edges

    def combine(self, first: Any, second: Any) -> Any:
        if first is None:
            return second
        if second is None:
            return first
        return self.program.gather_sum(first, second)

    def gather(self, v: int, counters: Counter) -> Any:
        """Fresh gather over the program's gather edges; each read counts as a message."""
        program = self.program
        owner = self.assignment.owner
        vertex = GasVertex(v, self.states[v], self.graph)
        total = None
        for source, target in self.edges_of(v, program.gather_edges):
            edge = GasEdge(self, source, target, v)
            value = program.gather(vertex, edge)
            counters["local" if owner[edge.neighbor] == owner[v] else "remote"] += 1
            counters["bytes"] += estimate_payload_size(value)
            total = value if total is None else program.gather_sum(total, value)
        return total

    def gather_or_cache(self, v: int, counters: Counter) -> Any:
        if self.caching and v in self.cache:
            total = self.combine(self.cache[v], self.pending.pop(v, None))
            self.cache[v] = total
            if self.options.verify_cache:
                error = _difference(total, self.gather(v, Counter()))
                with self._error_lock:
                    self.metrics.cache_max_error = max(self.metrics.cache_max_error, error)
            counters["cache_hits"] += 1
            return total
        total = self.gather(v, counters)
        if self.caching:
            self.cache[v] = total
            self.pending.pop(v, None)
        return total

    def apply(self, v: int, total: Any, counters: Counter) -> bool:
        """Run apply; returns True if the vertex rescheduled itself."""
        vertex = GasVertex(v, self.states[v], self.graph, writable=True)
        before = self.program.result(vertex.value)
        self.program.apply(vertex, total)
        self.states[v] = vertex.value
        if self.program.result(vertex.value) != before:
            counters["vertex_updates"] += 1
            counters["state_changes"] += 1
        return vertex.signalled

    def scatter(self, v: int, ctx: ScatterContext) -> None:
        vertex = GasVertex(v, self.states[v], self.graph)
        for source, target in self.edges_of(v, self.program.scatter_edges):
            self.program.scatter(vertex, GasEdge(self, source, target, v), ctx)

    def absorb(self, counters: Counter) -> None:
        reads = counters["local"] + counters["remote"]
        self.metrics.messages_sent += reads
        self.metrics.messages_delivered += reads
        self.metrics.messages_local += counters["local"]
        self.metrics.messages_remote += counters["remote"]
        self.metrics.payload_bytes += counters["bytes"]
        self.metrics.vertex_updates += counters["vertex_updates"]
        self.metrics.state_changes += counters["state_changes"]

    def initial_active(self) -> List[int]:
        if self.options.initial_active is None:
            return list(range(self.graph.n))
        # Given order is kept; the async queue starts in it.
        active = list(dict.fromkeys(self.options.initial_active))
        for v in active:
            if not 0 <= v < self.graph.n:
                raise RoutingError(f"initial activation of nonexistent vertex {v}", v)
        return active

    def results(self) -> List[Any]:
        return [self.program.result(state) for state in self.states]


class GasSyncEngine(_GasRunner):
    """Synchronous engine: gather, apply and scatter phases separated by barriers."""

    def run(self) -> RunMetrics:
        start = time.perf_counter()
        active = self.initial_active()
        iteration = 0
        while active:
            if iteration >= self.options.max_iterations:
                self.metrics.max_supersteps_reached = True
                logger.warning(f"{self.program.name}: stopped after max_iterations={self.options.max_iterations}")
                break
            self._iterate(set(active))
            self.metrics.active_vertices_per_superstep.append(len(active))
            iteration += 1
            self.metrics.supersteps = iteration
            if self.options.observer is not None:
                self.options.observer(iteration, self.states)
            active = sorted(self._next_active)

        self.metrics.converged = not self.metrics.max_supersteps_reached
        self.metrics.wall_time = time.perf_counter() - start
        logger.info(
            f"gas-sync {self.program.name} finished: iterations={iteration} "
            f"vertex_updates={self.metrics.vertex_updates}"
        )
        return self.metrics

    def _iterate(self, active: Set[int]) -> None:
        work = {w.id: [v for v in w.vertices if v in active] for w in self.cluster.workers}
        self.cluster.begin_superstep()

        totals: Dict[int, Any] = {}
        for part in self.cluster.run_workers(
                lambda w: {v: self.gather_or_cache(v, w.counters) for v in work[w.id]}):
            totals.update(part)

        rescheduled: Set[int] = set()
        for part in self.cluster.run_workers(
                lambda w: [v for v in work[w.id] if self.apply(v, totals[v], w.counters)]):
            rescheduled.update(part)

        def scatter_worker(worker) -> Tuple[Set[int], List[Tuple[int, Any]]]:
            signals: Set[int] = set()
            deltas: List[Tuple[int, Any]] = []
            ctx = ScatterContext(self.graph.n, signals.add, lambda t, d: deltas.append((t, d)))
            for v in work[worker.id]:
                self.scatter(v, ctx)
            return signals, deltas

        self._next_active = set(rescheduled)
        for signals, deltas in self.cluster.run_workers(scatter_worker):
            self._next_active.update(signals)
            if self.caching:
                for target, delta in deltas:
                    if target in self.cache:
                        self.pending[target] = self.combine(self.pending.get(target), delta)
        for worker in self.cluster.workers:
            self.absorb(worker.counters)


class GasAsyncEngine(_GasRunner):
    """
    Asynchronous engine: FIFO queue with de-duplication.

    Single-threaded mode processes the queue in order. Parallel mode runs one
    thread per worker and locks the closed neighborhood of a vertex (in
    ascending id order) for its whole gather/apply/scatter unit.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.apply_log: List[Tuple[int, Any]] = []

    def _initial_queue(self) -> List[int]:
        order = self.initial_active()
        if self.options.schedule == "shuffled":
            rng = np.random.default_rng(self.options.seed)
            order = [order[i] for i in rng.permutation(len(order))]
        return order

    def _execute(self, v: int, counters: Counter, schedule: Callable[[int], None]) -> None:
        total = self.gather_or_cache(v, counters)
        if self.apply(v, total, counters):
            schedule(v)
        if self.options.record_applies:
            self.apply_log.append((v, self.states[v]))

        def post_delta(target: int, delta: Any) -> None:
            if self.caching and target in self.cache:
                self.cache[target] = self.combine(self.cache[target], delta)

        self.scatter(v, ScatterContext(self.graph.n, schedule, post_delta))

    def run(self) -> RunMetrics:
        start = time.perf_counter()
        if self.options.parallel and self.assignment.k > 1:
            executions = self._run_parallel()
        else:
            executions = self._run_serial()
        self.metrics.active_vertices_per_superstep = []
        self.metrics.converged = not self.metrics.max_supersteps_reached
        self.metrics.wall_time = time.perf_counter() - start
        logger.info(f"gas-async {self.program.name} finished: updates={executions}")
        return self.metrics

    def _run_serial(self) -> int:
        queue = deque(self._initial_queue())
        queued = set(queue)
        counters: Counter = Counter()

        def schedule(target: int) -> None:
            if target not in queued:
                queued.add(target)
                queue.append(target)

        executions = 0
        while queue:
            if executions >= self.options.max_updates:
                self.metrics.max_supersteps_reached = True
                logger.warning(f"{self.program.name}: stopped after max_updates={self.options.max_updates}")
                break
            v = queue.popleft()
            queued.discard(v)
            self._execute(v, counters, schedule)
            executions += 1
        self.absorb(counters)
        return executions

    def _run_parallel(self) -> int:
        queue = deque(self._initial_queue())
        queued = set(queue)
        condition = threading.Condition()
        locks = [threading.Lock() for _ in range(self.graph.n)]
        state = {"in_flight": 0, "executions": 0, "stopped": False}
        errors: List[BaseException] = []

        def schedule(target: int) -> None:
            with condition:
                if target not in queued:
                    queued.add(target)
                    queue.append(target)
                    condition.notify()

        def take() -> Optional[int]:
            with condition:
                while not queue and state["in_flight"] > 0 and not state["stopped"]:
                    condition.wait()
                if not queue or state["stopped"]:
                    return None
                if state["executions"] >= self.options.max_updates:
                    state["stopped"] = True
                    self.metrics.max_supersteps_reached = True
                    condition.notify_all()
                    return None
                v = queue.popleft()
                queued.discard(v)
                state["in_flight"] += 1
                state["executions"] += 1
                return v

        def loop(worker) -> Counter:
            counters: Counter = Counter()
            while True:
                v = take()
                if v is None:
                    return counters
                neighborhood = sorted({v, *self.graph.all_neighbors(v)})
                for u in neighborhood:
                    locks[u].acquire()
                try:
                    self._execute(v, counters, schedule)
                except BaseException as e:
                    with condition:
                        errors.append(e)
                        state["stopped"] = True
                        condition.notify_all()
                    raise
                finally:
                    for u in reversed(neighborhood):
                        locks[u].release()
                    with condition:
                        state["in_flight"] -= 1
                        condition.notify_all()

        for counters in self.cluster.run_workers(loop):
            self.absorb(counters)
        if errors:
            raise errors[0]
        return state["executions"]


def replay_applies(graph: Graph, program: GasProgram, apply_log: Sequence[Tuple[int, Any]],
                   edge_store: Optional[EdgeStore] = None) -> Tuple[List[Any], int]:
    """
    Re-execute a logged apply sequence serially from the initial states.

    Each entry is re-gathered against the replayed states and applied; a
    serializable run reproduces every logged state.

    Returns:
        Replayed states and the number of entries whose replayed state differs from the log
    """
    runner = _GasRunner(graph, partition_single(graph), program, GasOptions(), edge_store)
    counters: Counter = Counter()
    mismatches = 0
    for v, logged in apply_log:
        runner.apply(v, runner.gather(v, counters), counters)
        if _difference(program.result(runner.states[v]), program.result(logged)) > 1e-12:
            mismatches += 1
    return runner.states, mismatches


def partition_single(graph: Graph) -> PartitionAssignment:
    return PartitionAssignment(k=1, owner=(0,) * graph.n)


class MessageContext:
    """Scatter-side handle of the message API."""

    def __init__(self, num_vertices: int, send: Callable[[int, Any], None]):
        self._n = num_vertices
        self._send = send

    def send(self, target: int, payload: Any) -> None:
        if not 0 <= target < self._n:
            raise RoutingError(f"message to nonexistent vertex {target}", (target, payload))
        self._send(target, payload)


class MessageProgram(ABC):
    """GAS program driven by messages: apply consumes the combined inbox instead of a gather."""

    combiner: Combiner
    scatter_edges: EdgeDirection = EdgeDirection.ALL
    delta_correct: bool = False

    @property
    def name(self) -> str:
        return type(self).__name__

    @abstractmethod
    def initial_state(self, vertex: int, graph: Graph) -> Any:
        """init(vertex)."""

    @abstractmethod
    def apply(self, vertex: GasVertex, message: Optional[Any]) -> None:
        """Update vertex.value from the combined message (None on the first activation)."""

    def scatter(self, vertex: GasVertex, edge: GasEdge, ctx: MessageContext) -> None:
        pass

    def result(self, state: Any) -> Any:
        return state


class GasMessageEngine(_GasRunner):
    """Runs a MessageProgram under sync or async scheduling."""

    def __init__(self, graph: Graph, assignment: PartitionAssignment, program: MessageProgram,
                 mode: str = "sync", options: Optional[GasOptions] = None):
        if mode not in ("sync", "async"):
            raise ArgumentError(f"message API mode must be 'sync' or 'async', got '{mode}'")
        super().__init__(graph, assignment, program, options)  # type: ignore[arg-type]
        self.mode = mode
        self.cluster = Cluster(
            assignment,
            combiner=program.combiner,
            parallel=self.options.parallel,
            max_messages=self.options.max_messages_per_superstep,
        )
        self.metrics = self.cluster.metrics

    def _apply_message(self, v: int, message: Any, counters: Counter) -> None:
        vertex = GasVertex(v, self.states[v], self.graph, writable=True)
        before = self.program.result(vertex.value)
        self.program.apply(vertex, message)
        self.states[v] = vertex.value
        if self.program.result(vertex.value) != before:
            counters["vertex_updates"] += 1
            counters["state_changes"] += 1

    def _scatter(self, v: int, send: Callable[[int, Any], None]) -> None:
        vertex = GasVertex(v, self.states[v], self.graph)
        ctx = MessageContext(self.graph.n, send)
        for source, target in self.edges_of(v, self.program.scatter_edges):
            self.program.scatter(vertex, GasEdge(self, source, target, v), ctx)

    def run(self) -> RunMetrics:
        start = time.perf_counter()
        if self.mode == "sync":
            self._run_sync()
        else:
            self._run_async()
        self.metrics.converged = not self.metrics.max_supersteps_reached
        self.metrics.wall_time = time.perf_counter() - start
        logger.info(f"gas-message ({self.mode}) {self.program.name} finished: "
                    f"vertex_updates={self.metrics.vertex_updates}")
        return self.metrics

    def _run_sync(self) -> None:
        inbox: Dict[int, List[Any]] = {}
        active = self.initial_active()
        rounds = 0
        while active:
            if rounds >= self.options.max_iterations:
                self.metrics.max_supersteps_reached = True
                logger.warning(f"{self.program.name}: stopped after max_iterations={self.options.max_iterations}")
                break
            active_set = set(active)
            self.cluster.begin_superstep()

            def round_worker(worker) -> None:
                for v in worker.vertices:
                    if v in active_set:
                        payloads = inbox.get(v)
                        self._apply_message(v, payloads[0] if payloads else None, worker.counters)
                for v in worker.vertices:
                    if v in active_set:
                        self._scatter(v, worker.send)

            self.cluster.run_workers(round_worker)
            self.metrics.active_vertices_per_superstep.append(len(active))
            inbox = self.cluster.barrier()
            rounds += 1
            self.metrics.supersteps = rounds
            if self.options.observer is not None:
                self.options.observer(rounds, self.states)
            active = sorted(inbox)

    def _run_async(self) -> None:
        owner = self.assignment.owner
        combiner = self.program.combiner
        queue = deque(self.initial_active())
        queued = set(queue)
        mailbox: Dict[int, Any] = {}
        counters: Counter = Counter()

        def sender(source: int) -> Callable[[int, Any], None]:
            # Arrivals combine into a pending mailbox entry; only new entries count as deliveries.
            def send(target: int, payload: Any) -> None:
                self.metrics.messages_sent += 1
                if target in mailbox:
                    mailbox[target] = combiner.combine(mailbox[target], payload)
                else:
                    mailbox[target] = payload
                    self.metrics.messages_delivered += 1
                    if owner[target] == owner[source]:
                        self.metrics.messages_local += 1
                    else:
                        self.metrics.messages_remote += 1
                    self.metrics.payload_bytes += estimate_payload_size(payload)
                if target not in queued:
                    queued.add(target)
                    queue.append(target)
            return send

        executions = 0
        while queue:
            if executions >= self.options.max_updates:
                self.metrics.max_supersteps_reached = True
                logger.warning(f"{self.program.name}: stopped after max_updates={self.options.max_updates}")
                break
            v = queue.popleft()
            queued.discard(v)
            self._apply_message(v, mailbox.pop(v, None), counters)
            self._scatter(v, sender(v))
            executions += 1
        self.metrics.max_inbox_size = 1 if self.metrics.messages_delivered else 0
        self.metrics.vertex_updates += counters["vertex_updates"]
        self.metrics.state_changes += counters["state_changes"]


def run_gas_sync(graph: Graph, assignment: PartitionAssignment, program: GasProgram,
                 options: Optional[GasOptions] = None,
                 edge_store: Optional[EdgeStore] = None) -> Tuple[List[Any], RunMetrics]:
    """Run a GAS program on the synchronous engine; returns (states, metrics)."""
    engine = GasSyncEngine(graph, assignment, program, options, edge_store)
    metrics = engine.run()
    return engine.states, metrics


def run_gas_async(graph: Graph, assignment: PartitionAssignment, program: GasProgram,
                  options: Optional[GasOptions] = None,
                  edge_store: Optional[EdgeStore] = None) -> Tuple[List[Any], RunMetrics]:
    """Run a GAS program on the asynchronous engine; returns (states, metrics)."""
    engine = GasAsyncEngine(graph, assignment, program, options, edge_store)
    metrics = engine.run()
    return engine.states, metrics


def run_gas_message_api(graph: Graph, assignment: PartitionAssignment, program: MessageProgram,
                        engine: str = "sync",
                        options: Optional[GasOptions] = None) -> Tuple[List[Any], RunMetrics]:
    """Run a message-API program under the sync or async scheduler; returns (states, metrics)."""
    runner = GasMessageEngine(graph, assignment, program, engine, options)
    metrics = runner.run()
    return runner.states, metrics


def map_reduce_vertices(states: Iterable[Any], map_fn: Callable[[Any], Any],
                        reduce_fn: Callable[[Any, Any], Any], initial: Any) -> Any:
    """Fold map_fn(state) over all vertex states in id order."""
    total = initial
    for state in states:
        total = reduce_fn(total, map_fn(state))
    return total
