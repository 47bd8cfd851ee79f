"""
Simulated worker cluster.

Workers live in one process. Each owns the vertices of one partition block,
buffers outgoing messages until the barrier and keeps private aggregator and
counter partials that are merged when the barrier is crossed. Local versus
remote traffic is decided by comparing worker ids.
"""

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import reduce
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple
import logging
import operator

from ..errors import ConfigurationError, ResourceLimitError, RoutingError
from ..graph import PartitionAssignment

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MessageEnvelope:
    """A payload addressed to dst, stamped with its sending worker and sequence number."""
    dst: int
    payload: Any
    src_worker: int
    seq: int


@dataclass(frozen=True)
class Combiner:
    """Associative and commutative reduction of messages bound for the same vertex."""
    name: str
    combine: Callable[[Any, Any], Any]

    def fold(self, payloads: Iterable[Any]) -> Any:
        return reduce(self.combine, payloads)


def _concat(first: Any, second: Any) -> Tuple[Any, ...]:
    return tuple(first) + tuple(second)


SUM_COMBINER = Combiner("sum", operator.add)
MIN_COMBINER = Combiner("min", min)
MAX_COMBINER = Combiner("max", max)
# Commutative up to element order; receivers must treat the tuple as a multiset.
CONCAT_COMBINER = Combiner("concat", _concat)

_UNSET = object()


@dataclass(frozen=True)
class Aggregator:
    """
    Global reduction whose committed value is readable in the next superstep.

    The value starts each superstep from identity, or from the previous
    committed value when sticky. `initial` is what readers see before the
    first commit (identity if not given).
    """
    name: str
    identity: Any
    reduce: Callable[[Any, Any], Any]
    initial: Any = _UNSET
    sticky: bool = False

    @property
    def first_value(self) -> Any:
        return self.identity if self.initial is _UNSET else self.initial


def sum_aggregator(name: str, **kwargs) -> Aggregator:
    return Aggregator(name, 0, operator.add, **kwargs)


def and_aggregator(name: str, **kwargs) -> Aggregator:
    return Aggregator(name, True, operator.and_, **kwargs)


def or_aggregator(name: str, **kwargs) -> Aggregator:
    return Aggregator(name, False, operator.or_, **kwargs)


def min_aggregator(name: str, **kwargs) -> Aggregator:
    return Aggregator(name, float("inf"), min, **kwargs)


def max_aggregator(name: str, **kwargs) -> Aggregator:
    return Aggregator(name, float("-inf"), max, **kwargs)


class AggregatorSet:
    """Registered aggregators and their committed values."""

    def __init__(self, aggregators: Iterable[Aggregator] = ()):
        self._aggregators: Dict[str, Aggregator] = {}
        for aggregator in aggregators:
            if aggregator.name in self._aggregators:
                raise ConfigurationError(f"aggregator '{aggregator.name}' registered twice")
            self._aggregators[aggregator.name] = aggregator
        self.values: Dict[str, Any] = {name: a.first_value for name, a in self._aggregators.items()}

    def lookup(self, name: str) -> Aggregator:
        aggregator = self._aggregators.get(name)
        if aggregator is None:
            raise ConfigurationError(f"aggregator '{name}' is not registered")
        return aggregator

    def names(self) -> List[str]:
        return list(self._aggregators)

    def accumulate(self, partials: Dict[str, Any], name: str, value: Any) -> None:
        """Fold value into a worker-private partial map."""
        aggregator = self.lookup(name)
        if name in partials:
            partials[name] = aggregator.reduce(partials[name], value)
        else:
            partials[name] = value

    def commit(self, contributions: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
        """
        Reduce worker partials into the values readable next superstep.

        Args:
            contributions: One partial map per worker, in worker order

        Returns:
            Mapping of aggregator name to committed value
        """
        for partial in contributions:
            for name in partial:
                self.lookup(name)

        committed: Dict[str, Any] = {}
        for name, aggregator in self._aggregators.items():
            value = self.values[name] if aggregator.sticky else aggregator.identity
            for partial in contributions:
                if name in partial:
                    value = aggregator.reduce(value, partial[name])
            committed[name] = value
        self.values = committed
        return dict(committed)

    def get(self, name: str) -> Any:
        self.lookup(name)
        return self.values[name]

    def set(self, name: str, value: Any) -> None:
        self.lookup(name)
        self.values[name] = value


@dataclass
class RunMetrics:
    """Counters collected over one engine run."""
    supersteps: int = 0
    messages_sent: int = 0
    messages_delivered: int = 0
    messages_local: int = 0
    messages_remote: int = 0
    payload_bytes: int = 0
    vertex_updates: int = 0
    state_changes: int = 0
    active_vertices_per_superstep: List[int] = field(default_factory=list)
    max_inbox_size: int = 0
    max_supersteps_reached: bool = False
    converged: bool = True
    recoveries: int = 0
    checkpoints_written: int = 0
    cache_max_error: float = 0.0
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def merge(self, other: "RunMetrics") -> "RunMetrics":
        """Metrics of two consecutive runs (e.g. the phases of a two-phase program)."""
        merged = RunMetrics()
        for f in fields(self):
            first, second = getattr(self, f.name), getattr(other, f.name)
            if f.name in ("max_inbox_size", "cache_max_error"):
                value = max(first, second)
            elif f.name == "max_supersteps_reached":
                value = first or second
            elif f.name == "converged":
                value = first and second
            else:
                value = first + second
            setattr(merged, f.name, value)
        return merged

    def absorb(self, counters: Dict[str, int]) -> None:
        """Add per-worker counters merged at a barrier."""
        self.vertex_updates += counters.get("vertex_updates", 0)
        self.state_changes += counters.get("state_changes", 0)


def estimate_payload_size(payload: Any) -> int:
    """Declared serialized size: 1 byte for bools, 8 per scalar, summed over containers."""
    if isinstance(payload, bool):
        return 1
    if isinstance(payload, (int, float)):
        return 8
    if isinstance(payload, (tuple, list, frozenset, set)):
        return sum(estimate_payload_size(item) for item in payload)
    return 8


def exchange(outboxes: Sequence[Sequence[MessageEnvelope]],
             num_vertices: int,
             owner: Sequence[int],
             combiner: Optional[Combiner] = None,
             metrics: Optional[RunMetrics] = None,
             payload_size: Callable[[Any], int] = estimate_payload_size,
             max_messages: Optional[int] = None) -> Dict[int, List[Any]]:
    """
    Route one superstep's buffered messages to their destination vertices.

    With a combiner, each (src_worker, dst) group is collapsed before
    transmission and all arrivals at a vertex are folded once more on the
    receiver, so an inbox holds at most one payload. Arrival order is
    (src_worker, seq).

    Args:
        outboxes: Envelopes buffered by each worker, indexed by worker id
        num_vertices: Valid destinations are 0..num_vertices-1
        owner: Worker owning each vertex
        combiner: Optional message combiner
        metrics: Counters to update
        payload_size: Declared size of one payload in bytes
        max_messages: Resource guard on messages sent this superstep

    Returns:
        Mapping of vertex id to its delivered payloads (only non-empty inboxes)
    """
    metrics = metrics if metrics is not None else RunMetrics()
    sent = sum(len(outbox) for outbox in outboxes)
    metrics.messages_sent += sent
    if max_messages is not None and sent > max_messages:
        raise ResourceLimitError(f"{sent} messages in one superstep exceeds the limit of {max_messages}")

    transmitted: List[MessageEnvelope] = []
    for outbox in outboxes:
        for envelope in outbox:
            if not 0 <= envelope.dst < num_vertices:
                raise RoutingError(f"message to nonexistent vertex {envelope.dst}", envelope)
        if combiner is None:
            transmitted.extend(outbox)
            continue
        grouped: Dict[int, MessageEnvelope] = {}
        for envelope in outbox:
            held = grouped.get(envelope.dst)
            if held is None:
                grouped[envelope.dst] = envelope
            else:
                grouped[envelope.dst] = MessageEnvelope(
                    held.dst, combiner.combine(held.payload, envelope.payload), held.src_worker, held.seq
                )
        transmitted.extend(grouped.values())

    transmitted.sort(key=lambda e: (e.src_worker, e.seq))
    inboxes: Dict[int, List[Any]] = {}
    for envelope in transmitted:
        if owner[envelope.dst] == envelope.src_worker:
            metrics.messages_local += 1
        else:
            metrics.messages_remote += 1
        metrics.payload_bytes += payload_size(envelope.payload)
        inboxes.setdefault(envelope.dst, []).append(envelope.payload)
    metrics.messages_delivered += len(transmitted)

    if combiner is not None:
        inboxes = {dst: [combiner.fold(payloads)] for dst, payloads in inboxes.items()}
    if inboxes:
        metrics.max_inbox_size = max(metrics.max_inbox_size, max(len(p) for p in inboxes.values()))
    return inboxes


class Worker:
    """One simulated worker: its vertices, outbox and private partials."""

    def __init__(self, worker_id: int, vertices: Sequence[int], aggregators: AggregatorSet):
        self.id = worker_id
        self.vertices = tuple(vertices)
        self.aggregators = aggregators
        self.outbox: List[MessageEnvelope] = []
        self.partials: Dict[str, Any] = {}
        self.counters: Counter = Counter()
        self._seq = 0

    def begin_superstep(self) -> None:
        self.outbox = []
        self.partials = {}
        self.counters = Counter()
        self._seq = 0

    def send(self, dst: int, payload: Any) -> None:
        self.outbox.append(MessageEnvelope(dst, payload, self.id, self._seq))
        self._seq += 1

    def aggregate(self, name: str, value: Any) -> None:
        self.aggregators.accumulate(self.partials, name, value)

    def count(self, key: str, amount: int = 1) -> None:
        self.counters[key] += amount


class Cluster:
    """
    Workers for one partition assignment plus the barrier that joins them.

    In parallel mode each worker's phase runs on its own thread; outboxes and
    partials stay worker-private until barrier() merges them in worker order.
    """

    def __init__(self, assignment: PartitionAssignment,
                 aggregators: Iterable[Aggregator] = (),
                 combiner: Optional[Combiner] = None,
                 parallel: bool = False,
                 max_messages: Optional[int] = None,
                 payload_size: Callable[[Any], int] = estimate_payload_size):
        self.assignment = assignment
        self.aggregators = AggregatorSet(aggregators)
        self.combiner = combiner
        self.parallel = parallel
        self.max_messages = max_messages
        self.payload_size = payload_size
        self.metrics = RunMetrics()

        members: List[List[int]] = [[] for _ in range(assignment.k)]
        for v, block in enumerate(assignment.owner):
            members[block].append(v)
        self.workers = [Worker(b, members[b], self.aggregators) for b in range(assignment.k)]

    @property
    def num_vertices(self) -> int:
        return self.assignment.n

    def owner(self, v: int) -> int:
        return self.assignment.owner[v]

    def begin_superstep(self) -> None:
        for worker in self.workers:
            worker.begin_superstep()

    def run_workers(self, fn: Callable[[Worker], Any]) -> List[Any]:
        """Run fn once per worker; results in worker order."""
        if not self.parallel or len(self.workers) == 1:
            return [fn(worker) for worker in self.workers]
        with ThreadPoolExecutor(max_workers=len(self.workers)) as pool:
            futures = [pool.submit(fn, worker) for worker in self.workers]
            return [future.result() for future in futures]

    def barrier(self) -> Dict[int, List[Any]]:
        """Exchange outboxes, merge counters and commit aggregators; returns next inboxes."""
        inboxes = exchange(
            [worker.outbox for worker in self.workers],
            self.num_vertices,
            self.assignment.owner,
            combiner=self.combiner,
            metrics=self.metrics,
            payload_size=self.payload_size,
            max_messages=self.max_messages,
        )
        for worker in self.workers:
            self.metrics.absorb(worker.counters)
        self.aggregators.commit([worker.partials for worker in self.workers])
        return inboxes

    def counter_total(self, key: str) -> int:
        return sum(worker.counters.get(key, 0) for worker in self.workers)


__all__ = [
    "MessageEnvelope",
    "Combiner",
    "SUM_COMBINER",
    "MIN_COMBINER",
    "MAX_COMBINER",
    "CONCAT_COMBINER",
    "Aggregator",
    "AggregatorSet",
    "sum_aggregator",
    "and_aggregator",
    "or_aggregator",
    "min_aggregator",
    "max_aggregator",
    "RunMetrics",
    "estimate_payload_size",
    "exchange",
    "Worker",
    "Cluster",
]
