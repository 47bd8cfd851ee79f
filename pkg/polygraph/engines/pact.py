"""
PACT-style dataflow engine.

Plans are DAGs of second-order operators (map, join, group_by with an
aggregate, reduce, bulk_iteration) over immutable tuple datasets. Each
operator runs on `parallelism` data partitions: map on contiguous chunks,
join and grouping after hash-partitioning on the key. Groups are sorted and
float sums use math.fsum, so results never depend on the parallelism.
"""

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union
import io
import logging
import math
import time

import pandas as pd

from ..cluster import RunMetrics, estimate_payload_size
from ..errors import ArgumentError, PlanValidationError
from ..graph.hashing import MASK64, hash_pair

logger = logging.getLogger(__name__)

Row = Tuple[Any, ...]


class FieldType(str, Enum):
    """Semantic type of a tuple field."""
    ID = "id"
    LABEL = "label"
    SCORE = "score"
    COUNT = "count"


# Vertex ids and labels share one id space, so they may be joined on.
_JOINABLE = frozenset({FieldType.ID, FieldType.LABEL})
_KEY_TYPES = frozenset({FieldType.ID, FieldType.LABEL, FieldType.COUNT})


def _keys_compatible(left: FieldType, right: FieldType) -> bool:
    return left == right or (left in _JOINABLE and right in _JOINABLE)


@dataclass(frozen=True)
class Dataset:
    """Multiset of fixed-arity tuples with a per-field schema."""
    schema: Tuple[FieldType, ...]
    rows: Tuple[Row, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(FieldType(f) for f in self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for row in self.rows:
            if len(row) != len(self.schema):
                raise PlanValidationError(f"row {row!r} does not match arity {len(self.schema)}")

    @property
    def arity(self) -> int:
        return len(self.schema)

    def __len__(self) -> int:
        return len(self.rows)

    def multiset(self) -> Counter:
        return Counter(self.rows)

    def sorted_rows(self) -> List[Row]:
        return sorted(self.rows)

    def to_csv(self, sink: Union[str, Path, io.TextIOBase, None] = None) -> Optional[str]:
        """One tuple per line, comma-separated, no header."""
        frame = pd.DataFrame(list(self.rows), columns=range(self.arity))
        return frame.to_csv(sink, header=False, index=False)

    @classmethod
    def from_csv(cls, source: Union[str, Path, io.TextIOBase], schema: Sequence[FieldType]) -> "Dataset":
        schema = tuple(FieldType(f) for f in schema)
        try:
            frame = pd.read_csv(source, header=None)
        except pd.errors.EmptyDataError:
            return cls(schema, ())
        if frame.shape[1] != len(schema):
            raise PlanValidationError(f"CSV has {frame.shape[1]} columns, schema expects {len(schema)}")
        casts = [float if f == FieldType.SCORE else int for f in schema]
        rows = tuple(
            tuple(cast(value) for cast, value in zip(casts, record))
            for record in frame.itertuples(index=False, name=None)
        )
        return cls(schema, rows)


class OperatorKind(str, Enum):
    SOURCE = "source"
    MAP = "map"
    JOIN = "join"
    GROUP_BY = "group_by"
    REDUCE = "reduce"
    BULK_ITERATION = "bulk_iteration"
    SINK = "sink"


AGGREGATES = ("sum", "count", "min", "most_frequent")


@dataclass
class OperatorNode:
    """One operator of a plan; `schema` is its output schema."""
    name: str
    kind: OperatorKind
    inputs: Tuple[str, ...] = ()
    schema: Optional[Tuple[FieldType, ...]] = None
    function: Optional[Callable[..., Any]] = None
    keys: Tuple[int, ...] = ()
    right_keys: Tuple[int, ...] = ()
    aggregate: Optional[str] = None
    value_field: Optional[int] = None
    body: Optional["DataflowPlan"] = None
    body_input: Optional[str] = None
    body_output: Optional[str] = None
    static_inputs: Dict[str, str] = field(default_factory=dict)
    max_iterations: int = 1
    convergence: Union[str, None, Callable[[Dataset, Dataset], bool]] = "unchanged"


class DataflowPlan:
    """Builder for a DAG of operators."""

    def __init__(self):
        self.nodes: Dict[str, OperatorNode] = {}

    def _add(self, node: OperatorNode) -> str:
        if node.name in self.nodes:
            raise PlanValidationError(f"operator '{node.name}' defined twice")
        self.nodes[node.name] = node
        return node.name

    def source(self, name: str, schema: Sequence[FieldType]) -> str:
        return self._add(OperatorNode(name, OperatorKind.SOURCE, schema=tuple(FieldType(f) for f in schema)))

    def map(self, name: str, input_name: str, function: Callable[[Row], Iterable[Row]],
            schema: Sequence[FieldType]) -> str:
        """function maps one row to zero or more rows."""
        return self._add(OperatorNode(name, OperatorKind.MAP, (input_name,), tuple(schema), function))

    def join(self, name: str, left: str, right: str, left_keys: Sequence[int], right_keys: Sequence[int],
             function: Optional[Callable[[Row, Row], Row]] = None,
             schema: Optional[Sequence[FieldType]] = None) -> str:
        """Inner equi-join; without a function the output is left + right."""
        return self._add(OperatorNode(
            name, OperatorKind.JOIN, (left, right),
            tuple(schema) if schema is not None else None, function,
            keys=tuple(left_keys), right_keys=tuple(right_keys),
        ))

    def group_by(self, name: str, input_name: str, keys: Sequence[int], aggregate: str,
                 value_field: Optional[int] = None) -> str:
        """Per-key fold; output rows are the key fields followed by the aggregate."""
        return self._add(OperatorNode(
            name, OperatorKind.GROUP_BY, (input_name,), keys=tuple(keys),
            aggregate=aggregate, value_field=value_field,
        ))

    def reduce(self, name: str, input_name: str, keys: Sequence[int],
               function: Callable[[Row, List[Row]], Iterable[Row]], schema: Sequence[FieldType]) -> str:
        """Custom per-group reduce; function(key, sorted rows) yields output rows."""
        return self._add(OperatorNode(
            name, OperatorKind.REDUCE, (input_name,), tuple(schema), function, keys=tuple(keys),
        ))

    def bulk_iteration(self, name: str, input_name: str, body: "DataflowPlan", body_input: str,
                       body_output: str, max_iterations: int,
                       convergence: Union[str, None, Callable[[Dataset, Dataset], bool]] = "unchanged",
                       static_inputs: Optional[Dict[str, str]] = None) -> str:
        """
        Feed body_output back into body_input until convergence or max_iterations.

        convergence is "unchanged" (multiset equality), None (always run
        max_iterations) or a callable(previous, current) -> bool.
        static_inputs maps further body sources to datasets of this plan.
        """
        static_inputs = dict(static_inputs or {})
        return self._add(OperatorNode(
            name, OperatorKind.BULK_ITERATION, (input_name, *static_inputs.values()),
            body=body, body_input=body_input, body_output=body_output,
            static_inputs=static_inputs, max_iterations=max_iterations, convergence=convergence,
        ))

    def sink(self, name: str, input_name: str) -> str:
        return self._add(OperatorNode(name, OperatorKind.SINK, (input_name,)))

    def topological_order(self) -> List[str]:
        indegree = {name: 0 for name in self.nodes}
        consumers: Dict[str, List[str]] = {name: [] for name in self.nodes}
        for node in self.nodes.values():
            for input_name in node.inputs:
                if input_name not in self.nodes:
                    raise PlanValidationError(f"operator '{node.name}' reads unknown input '{input_name}'")
                indegree[node.name] += 1
                consumers[input_name].append(node.name)
        ready = [name for name, degree in indegree.items() if degree == 0]
        order: List[str] = []
        while ready:
            name = ready.pop(0)
            order.append(name)
            for consumer in consumers[name]:
                indegree[consumer] -= 1
                if indegree[consumer] == 0:
                    ready.append(consumer)
        if len(order) != len(self.nodes):
            raise PlanValidationError("plan contains a cycle")
        return order

    def validate(self) -> List[str]:
        """Check arities, key types and acyclicity; fills in inferred schemas. Returns the run order."""
        order = self.topological_order()
        for name in order:
            node = self.nodes[name]
            inputs = [self.nodes[i].schema for i in node.inputs]
            node.schema = _infer_schema(node, inputs)
        return order

    def outputs(self) -> List[str]:
        sinks = [n.name for n in self.nodes.values() if n.kind == OperatorKind.SINK]
        if sinks:
            return sinks
        consumed = {i for n in self.nodes.values() for i in n.inputs}
        return [name for name in self.nodes if name not in consumed]


def _check_keys(node: OperatorNode, keys: Sequence[int], schema: Tuple[FieldType, ...]) -> None:
    for key in keys:
        if not 0 <= key < len(schema):
            raise PlanValidationError(f"'{node.name}': key field {key} outside arity {len(schema)}")
        if schema[key] not in _KEY_TYPES:
            raise PlanValidationError(f"'{node.name}': field {key} of type {schema[key].value} cannot be a key")


def _infer_schema(node: OperatorNode, inputs: List[Optional[Tuple[FieldType, ...]]]) -> Tuple[FieldType, ...]:
    kind = node.kind
    if kind == OperatorKind.SOURCE:
        return node.schema
    if kind in (OperatorKind.MAP, OperatorKind.SINK):
        return node.schema if kind == OperatorKind.MAP else inputs[0]
    if kind == OperatorKind.JOIN:
        left, right = inputs
        if len(node.keys) != len(node.right_keys) or not node.keys:
            raise PlanValidationError(f"'{node.name}': join needs the same non-zero number of keys on both sides")
        _check_keys(node, node.keys, left)
        _check_keys(node, node.right_keys, right)
        for lk, rk in zip(node.keys, node.right_keys):
            if not _keys_compatible(left[lk], right[rk]):
                raise PlanValidationError(
                    f"'{node.name}': cannot join {left[lk].value} field {lk} with {right[rk].value} field {rk}"
                )
        if node.schema is not None:
            return node.schema
        if node.function is not None:
            raise PlanValidationError(f"'{node.name}': a join with a function must declare its schema")
        return left + right
    if kind == OperatorKind.GROUP_BY:
        (schema,) = inputs
        _check_keys(node, node.keys, schema)
        if node.aggregate not in AGGREGATES:
            raise PlanValidationError(f"'{node.name}': unknown aggregate '{node.aggregate}'")
        key_schema = tuple(schema[k] for k in node.keys)
        if node.aggregate == "count":
            return key_schema + (FieldType.COUNT,)
        if node.value_field is None or not 0 <= node.value_field < len(schema):
            raise PlanValidationError(f"'{node.name}': aggregate '{node.aggregate}' needs a valid value field")
        return key_schema + (schema[node.value_field],)
    if kind == OperatorKind.REDUCE:
        _check_keys(node, node.keys, inputs[0])
        return node.schema
    if kind == OperatorKind.BULK_ITERATION:
        body = node.body
        if body is None or node.body_input not in body.nodes or node.body_output not in body.nodes:
            raise PlanValidationError(f"'{node.name}': iteration body must define its input and output")
        if node.max_iterations < 1:
            raise PlanValidationError(f"'{node.name}': max_iterations must be at least 1")
        for body_name, outer_schema in zip([node.body_input, *node.static_inputs], inputs):
            body_source = body.nodes.get(body_name)
            if body_source is None or body_source.kind != OperatorKind.SOURCE:
                raise PlanValidationError(f"'{node.name}': body source '{body_name}' missing")
            if len(body_source.schema) != len(outer_schema):
                raise PlanValidationError(f"'{node.name}': arity mismatch feeding body source '{body_name}'")
        body.validate()
        if len(body.nodes[node.body_output].schema) != len(inputs[0]):
            raise PlanValidationError(f"'{node.name}': body output arity differs from its input")
        return inputs[0]
    raise PlanValidationError(f"unknown operator kind {kind}")


def key_partition(key: Row, parallelism: int) -> int:
    """Stable partition of an integer key tuple."""
    h = len(key)
    for part in key:
        h = hash_pair(h, int(part) & MASK64)
    return h % parallelism


def _chunks(rows: Sequence[Row], parallelism: int) -> List[Sequence[Row]]:
    size = len(rows)
    return [rows[(i * size) // parallelism:((i + 1) * size) // parallelism] for i in range(parallelism)]


def _most_frequent(values: Sequence[Any]) -> Any:
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def _fold(aggregate: str, values: List[Any], field_type: FieldType) -> Any:
    if aggregate == "count":
        return len(values)
    if aggregate == "min":
        return min(values)
    if aggregate == "most_frequent":
        return _most_frequent(values)
    if field_type == FieldType.SCORE:
        return math.fsum(values)
    return sum(values)


class DataflowExecutor:
    """Executes a validated plan at a given parallelism, collecting shuffle metrics."""

    def __init__(self, parallelism: int, metrics: Optional[RunMetrics] = None):
        if parallelism < 1:
            raise ArgumentError(f"parallelism must be at least 1, got {parallelism}")
        self.parallelism = parallelism
        self.metrics = metrics or RunMetrics()

    def _shuffle(self, rows: Sequence[Row], keys: Sequence[int]) -> List[List[Row]]:
        """Hash-partition rows by key; rows leaving their source chunk count as remote messages."""
        partitions: List[List[Row]] = [[] for _ in range(self.parallelism)]
        for source, chunk in enumerate(_chunks(rows, self.parallelism)):
            for row in chunk:
                target = key_partition(tuple(row[k] for k in keys), self.parallelism)
                partitions[target].append(row)
                if target == source:
                    self.metrics.messages_local += 1
                else:
                    self.metrics.messages_remote += 1
                self.metrics.payload_bytes += estimate_payload_size(row)
        self.metrics.messages_sent += len(rows)
        self.metrics.messages_delivered += len(rows)
        return partitions

    def run(self, plan: DataflowPlan, sources: Dict[str, Dataset]) -> Dict[str, Dataset]:
        order = plan.validate()
        results: Dict[str, Dataset] = {}
        for name in order:
            node = plan.nodes[name]
            inputs = [results[i] for i in node.inputs]
            results[name] = self._execute(node, inputs, sources)
        return results

    def _execute(self, node: OperatorNode, inputs: List[Dataset], sources: Dict[str, Dataset]) -> Dataset:
        kind = node.kind
        if kind == OperatorKind.SOURCE:
            dataset = sources.get(node.name)
            if dataset is None:
                raise PlanValidationError(f"no dataset supplied for source '{node.name}'")
            if len(dataset.schema) != len(node.schema):
                raise PlanValidationError(
                    f"source '{node.name}' expects arity {len(node.schema)}, got {len(dataset.schema)}"
                )
            return Dataset(node.schema, dataset.rows)
        if kind == OperatorKind.SINK:
            return inputs[0]
        if kind == OperatorKind.MAP:
            rows: List[Row] = []
            for chunk in _chunks(inputs[0].rows, self.parallelism):
                for row in chunk:
                    rows.extend(tuple(out) for out in node.function(row))
            return self._checked(node, rows)
        if kind == OperatorKind.JOIN:
            return self._join(node, inputs[0], inputs[1])
        if kind in (OperatorKind.GROUP_BY, OperatorKind.REDUCE):
            return self._group(node, inputs[0])
        if kind == OperatorKind.BULK_ITERATION:
            return self._iterate(node, inputs)
        raise PlanValidationError(f"unknown operator kind {kind}")

    def _checked(self, node: OperatorNode, rows: List[Row]) -> Dataset:
        for row in rows:
            if len(row) != len(node.schema):
                raise PlanValidationError(f"'{node.name}' produced {row!r}, expected arity {len(node.schema)}")
        return Dataset(node.schema, tuple(rows))

    def _join(self, node: OperatorNode, left: Dataset, right: Dataset) -> Dataset:
        left_parts = self._shuffle(left.rows, node.keys)
        right_parts = self._shuffle(right.rows, node.right_keys)
        rows: List[Row] = []
        for left_rows, right_rows in zip(left_parts, right_parts):
            table: Dict[Row, List[Row]] = {}
            for row in right_rows:
                table.setdefault(tuple(row[k] for k in node.right_keys), []).append(row)
            for row in left_rows:
                for match in table.get(tuple(row[k] for k in node.keys), ()):
                    rows.append(tuple(node.function(row, match)) if node.function else row + match)
        return self._checked(node, rows)

    def _group(self, node: OperatorNode, dataset: Dataset) -> Dataset:
        rows: List[Row] = []
        for part in self._shuffle(dataset.rows, node.keys):
            groups: Dict[Row, List[Row]] = {}
            for row in part:
                groups.setdefault(tuple(row[k] for k in node.keys), []).append(row)
            for key in sorted(groups):
                members = sorted(groups[key])
                if node.kind == OperatorKind.REDUCE:
                    rows.extend(tuple(out) for out in node.function(key, members))
                    continue
                values = [] if node.value_field is None else [r[node.value_field] for r in members]
                if node.aggregate == "count":
                    values = members
                field_type = dataset.schema[node.value_field] if node.value_field is not None else FieldType.COUNT
                rows.append(key + (_fold(node.aggregate, values, field_type),))
        return self._checked(node, rows)

    def _iterate(self, node: OperatorNode, inputs: List[Dataset]) -> Dataset:
        current = inputs[0]
        static = dict(zip(node.static_inputs, inputs[1:]))
        convergence = node.convergence
        converged = False
        for _ in range(node.max_iterations):
            body_sources = {node.body_input: current, **static}
            following = self.run(node.body, body_sources)[node.body_output]
            self.metrics.supersteps += 1
            self.metrics.active_vertices_per_superstep.append(len(following))
            if convergence == "unchanged":
                done = following.multiset() == current.multiset()
            elif convergence is None:
                done = False
            else:
                done = bool(convergence(current, following))
            current = Dataset(inputs[0].schema, following.rows)
            if done:
                converged = True
                break
        if convergence is not None and not converged:
            self.metrics.max_supersteps_reached = True
            self.metrics.converged = False
            logger.warning(f"'{node.name}': no convergence after {node.max_iterations} iterations")
        return current


def execute_dag(plan: DataflowPlan, sources: Dict[str, Dataset],
                parallelism: int = 1) -> Tuple[Dict[str, Dataset], RunMetrics]:
    """
    Validate and run a plan.

    Args:
        plan: Operator DAG
        sources: Dataset for every source operator, by name
        parallelism: Number of data partitions per operator

    Returns:
        Output datasets (sinks, or unconsumed operators if the plan has no sinks) and metrics
    """
    start = time.perf_counter()
    executor = DataflowExecutor(parallelism)
    results = executor.run(plan, sources)
    executor.metrics.wall_time = time.perf_counter() - start
    logger.info(f"Dataflow finished: parallelism={parallelism} iterations={executor.metrics.supersteps} "
                f"shuffled={executor.metrics.messages_sent}")
    return {name: results[name] for name in plan.outputs()}, executor.metrics
