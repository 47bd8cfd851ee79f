"""
Benchmark matrix runner.

A BenchmarkSpec names one algorithm, one engine and a list of worker
counts; run_benchmark executes every (workers, repetition) cell and returns
one flat record per cell. Workers are logical partitions simulated in one
process, not machines.

Record fields, in output order, are frozen by RECORD_FIELDS (see
docs/benchmark-records.md).
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
import io
import json
import logging

import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..algorithms import AlgorithmRegistry, oracle_components, oracle_pagerank, oracle_triangles
from ..algorithms.clustering import TARGETS, summarize
from ..algorithms.community import DEFAULT_MAX_ROUNDS
from ..algorithms.pagerank import DEFAULT_ALPHA, DEFAULT_ITERATIONS, DEFAULT_TOLERANCE, MODES
from ..cluster import RunMetrics
from ..engines import PARTITIONERS, EngineConfig, normalize_engine
from ..errors import ArgumentError
from ..graph import Graph, generate_dorogovtsev_mendes, generate_erdos_renyi, load_edge_list_file

logger = logging.getLogger(__name__)

GENERATORS = ("dm", "gnp")
OUTPUT_FORMATS = ("csv", "json")
RECOVERABLE_ENGINES = ("pregel", "graph-centric")

RECORD_FIELDS = (
    ("algorithm", "engine", "workers", "repetition", "vertices", "edges")
    + tuple(RunMetrics.field_names())
    + ("checksum",)
)

ORACLE_ALGORITHMS = ("cc", "pagerank", "clustering-exact")
ORACLE_FIELDS = ("algorithm", "vertices", "edges", "checksum")


class BenchmarkSpec(BaseModel):
    """One benchmark matrix; every field is validated before anything runs."""

    input: Optional[Path] = None
    directed: bool = False
    generate: Optional[str] = None
    vertices: Optional[int] = Field(None, ge=3)
    edges_per_worker: Optional[int] = Field(None, ge=1)
    probability: float = Field(0.01, ge=0.0, le=1.0)

    algorithm: str
    engine: str
    workers: List[int] = Field(default_factory=lambda: [1])
    partitioner: str = "hash"

    alpha: float = DEFAULT_ALPHA
    mode: str = "fixed"
    tolerance: float = DEFAULT_TOLERANCE
    iterations: int = DEFAULT_ITERATIONS
    samples: int = 10000
    target: str = "average_local"
    seed: int = Field(0, ge=0)
    max_rounds: int = DEFAULT_MAX_ROUNDS

    repetitions: int = Field(1, ge=1)
    output: str = "csv"
    checkpoint_every: Optional[int] = Field(None, ge=1)
    kill_at_superstep: Optional[int] = Field(None, ge=0)
    checkpoint_dir: Optional[Path] = None
    parallel: bool = False
    omit_timing: bool = False

    @field_validator("engine")
    @classmethod
    def _engine_name(cls, value: str) -> str:
        return normalize_engine(value)

    @field_validator("workers")
    @classmethod
    def _positive_workers(cls, value: List[int]) -> List[int]:
        if not value or any(w < 1 for w in value):
            raise ValueError(f"worker counts must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "BenchmarkSpec":
        if (self.input is None) == (self.generate is None):
            raise ValueError("give exactly one of an input file or a generator")
        if self.generate is not None:
            if self.generate not in GENERATORS:
                raise ValueError(f"unknown generator '{self.generate}', expected one of {GENERATORS}")
            if self.generate == "dm" and (self.vertices is None) == (self.edges_per_worker is None):
                raise ValueError("the dm generator needs exactly one of vertices or edges_per_worker")
            if self.generate == "gnp" and self.vertices is None:
                raise ValueError("the gnp generator needs a vertex count")
        AlgorithmRegistry().check_pair(self.algorithm, self.engine)
        if self.partitioner not in PARTITIONERS:
            raise ValueError(f"unknown partitioner '{self.partitioner}', expected one of {PARTITIONERS}")
        if self.output not in OUTPUT_FORMATS:
            raise ValueError(f"unknown output format '{self.output}', expected one of {OUTPUT_FORMATS}")
        if self.mode not in MODES:
            raise ValueError(f"unknown PageRank mode '{self.mode}', expected one of {MODES}")
        if self.target not in TARGETS:
            raise ValueError(f"unknown clustering target '{self.target}', expected one of {TARGETS}")
        if (self.checkpoint_every is not None or self.kill_at_superstep is not None) \
                and self.engine not in RECOVERABLE_ENGINES:
            raise ValueError(f"checkpointing and fault injection need one of {RECOVERABLE_ENGINES}")
        if self.algorithm == "pagerank" and self.engine == "gas-async" and self.mode != "tolerance":
            raise ValueError("pagerank on gas-async needs tolerance mode")
        return self

    @classmethod
    def build(cls, **values: Any) -> "BenchmarkSpec":
        """Validate values into a spec; raises ArgumentError instead of pydantic's ValidationError."""
        try:
            return cls(**values)
        except ValidationError as e:
            messages = "; ".join(error["msg"] for error in e.errors())
            raise ArgumentError(f"invalid benchmark spec: {messages}") from e

    def parameters(self) -> Dict[str, Any]:
        """Algorithm options; the registry keeps the ones the algorithm accepts."""
        return {
            "alpha": self.alpha,
            "mode": self.mode,
            "tolerance": self.tolerance,
            "iterations": self.iterations,
            "samples": self.samples,
            "target": self.target,
            "seed": self.seed,
            "max_rounds": self.max_rounds,
        }

    def engine_config(self, workers: int) -> EngineConfig:
        return EngineConfig(
            workers=workers,
            partitioner=self.partitioner,
            partition_seed=self.seed,
            parallel=self.parallel,
            checkpoint_every=self.checkpoint_every,
            checkpoint_dir=self.checkpoint_dir,
            kill_at_superstep=self.kill_at_superstep,
        )


def weak_scaling_vertices(edges_per_worker: int, workers: int) -> int:
    """Dorogovtsev-Mendes size whose 2n - 3 edges come closest to edges_per_worker * workers."""
    return max((edges_per_worker * workers + 3) // 2, 3)


def load_graph(spec: BenchmarkSpec, workers: int) -> Graph:
    """Input graph of one matrix cell; only weak scaling depends on the worker count."""
    if spec.input is not None:
        return load_edge_list_file(spec.input, directed=spec.directed)
    if spec.generate == "gnp":
        return generate_erdos_renyi(spec.vertices, spec.probability, spec.seed, directed=spec.directed)
    n = spec.vertices if spec.vertices is not None else weak_scaling_vertices(spec.edges_per_worker, workers)
    return generate_dorogovtsev_mendes(n, spec.seed)


def run_benchmark(spec: BenchmarkSpec, registry: Optional[AlgorithmRegistry] = None) -> List[Dict[str, Any]]:
    """
    Run every (workers, repetition) cell of a spec.

    Args:
        spec: Validated benchmark spec
        registry: Algorithm registry (a default one if not given)

    Returns:
        One record per cell with the RECORD_FIELDS keys

    Raises:
        PolygraphError: The first failing cell's error, so callers can map it to an exit code
    """
    registry = registry or AlgorithmRegistry()
    records: List[Dict[str, Any]] = []
    graph: Optional[Graph] = None
    for workers in spec.workers:
        if graph is None or spec.edges_per_worker is not None:
            graph = load_graph(spec, workers)
        for repetition in range(spec.repetitions):
            outcome = registry.execute(spec.algorithm, graph, spec.engine, spec.engine_config(workers),
                                       spec.parameters())
            if not outcome.success:
                raise outcome.error
            metrics = outcome.metrics.to_dict()
            if spec.omit_timing:
                metrics["wall_time"] = 0.0
            record = {
                "algorithm": spec.algorithm,
                "engine": spec.engine,
                "workers": workers,
                "repetition": repetition,
                "vertices": graph.n,
                "edges": graph.m,
                **metrics,
                "checksum": outcome.data.checksum(),
            }
            records.append({name: record[name] for name in RECORD_FIELDS})
            logger.info(f"{spec.algorithm}/{spec.engine} workers={workers} rep={repetition}: "
                        f"supersteps={record['supersteps']} messages={record['messages_sent']}")
    return records


def oracle_record(graph: Graph, algorithm: str, alpha: float = DEFAULT_ALPHA,
                  iterations: int = DEFAULT_ITERATIONS) -> Dict[str, Any]:
    """Checksum of the brute-force result, comparable with run_benchmark checksums."""
    if algorithm == "cc":
        result = oracle_components(graph)
    elif algorithm == "pagerank":
        result = oracle_pagerank(graph.as_directed(), alpha, iterations)
    elif algorithm == "clustering-exact":
        if graph.directed:
            raise ArgumentError("clustering needs an undirected graph")
        deltas, _, _ = oracle_triangles(graph)
        result = summarize(graph, deltas)
    else:
        raise ArgumentError(f"no oracle for '{algorithm}', expected one of {ORACLE_ALGORITHMS}")
    return {"algorithm": algorithm, "vertices": graph.n, "edges": graph.m, "checksum": result.checksum()}


def _csv_value(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return ";".join(str(item) for item in value)
    return value


def _emit(records: Sequence[Dict[str, Any]], fields: Sequence[str], output_format: str) -> str:
    if output_format not in OUTPUT_FORMATS:
        raise ArgumentError(f"unknown output format '{output_format}', expected one of {OUTPUT_FORMATS}")
    if not records:
        raise ArgumentError("no records to emit")
    rows = [{name: record[name] for name in fields} for record in records]
    if output_format == "json":
        return json.dumps(rows) + "\n"
    frame = pd.DataFrame([{name: _csv_value(value) for name, value in row.items()} for row in rows],
                         columns=list(fields))
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def emit_metrics(records: Sequence[Dict[str, Any]], output_format: str = "csv") -> str:
    """
    Serialize records with the fixed field order.

    CSV has one header line; list fields are joined with ';'. JSON is an
    array of objects with the same field names.
    """
    return _emit(records, RECORD_FIELDS, output_format)


def emit_oracle(record: Dict[str, Any], output_format: str = "csv") -> str:
    return _emit([record], ORACLE_FIELDS, output_format)


__all__ = [
    "BenchmarkSpec",
    "ORACLE_ALGORITHMS",
    "RECORD_FIELDS",
    "emit_metrics",
    "emit_oracle",
    "load_graph",
    "oracle_record",
    "run_benchmark",
    "weak_scaling_vertices",
]
