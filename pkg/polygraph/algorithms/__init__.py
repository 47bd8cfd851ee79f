"""
Algorithm registry for polygraph.

Every analysis is exposed twice: as a plain function that raises on bad
input (connected_components, pagerank, ...) and as a registered
BaseAlgorithm whose execution through AlgorithmRegistry never raises and
reports failures in a RunResult instead.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple
import logging
import time

from ..cluster import RunMetrics
from ..engines import ENGINES, EngineConfig, normalize_engine
from ..errors import ArgumentError
from ..graph import Graph
from .clustering import clustering_approx, clustering_exact
from .community import DEFAULT_MAX_ROUNDS, community_detection_lp
from .components import connected_components
from .oracles import oracle_clustering, oracle_components, oracle_pagerank, oracle_triangles
from .pagerank import DEFAULT_ALPHA, DEFAULT_ITERATIONS, DEFAULT_TOLERANCE, pagerank
from .results import (
    AlgorithmResult, ClusteringResult, CommunityLabeling, ComponentLabeling, PageRankScores, checksum,
)

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Result of one registry execution."""
    success: bool
    data: Optional[AlgorithmResult]
    metrics: Optional[RunMetrics] = None
    error: Optional[BaseException] = None
    error_message: Optional[str] = None
    execution_time: float = 0.0
    metadata: Optional[Dict[str, Any]] = None


class BaseAlgorithm(ABC):
    """Base class for registered algorithms."""

    def __init__(self, name: str, description: str, engines: Sequence[str]):
        self.name = name
        self.description = description
        self.engines = tuple(engines)

    @abstractmethod
    def run(self, graph: Graph, engine: str, config: EngineConfig,
            **parameters) -> Tuple[AlgorithmResult, RunMetrics]:
        """Run on one engine; raises on invalid input."""

    @abstractmethod
    def get_schema(self) -> Dict[str, Any]:
        """Accepted parameters and their defaults."""

    def supports(self, engine: str) -> bool:
        return engine in self.engines

    def select_parameters(self, parameters: Dict[str, Any]) -> Dict[str, Any]:
        """Schema defaults overridden by the given values; other keys are ignored."""
        schema = self.get_schema()
        ignored = sorted(set(parameters) - set(schema))
        if ignored:
            logger.debug(f"{self.name}: ignoring parameters {ignored}")
        return {key: parameters.get(key, default) for key, default in schema.items()}


class ConnectedComponents(BaseAlgorithm):
    def __init__(self):
        super().__init__("cc", "Connected components by minimum-label propagation", ENGINES)

    def get_schema(self) -> Dict[str, Any]:
        return {"use_combiner": True}

    def run(self, graph, engine, config, **parameters):
        return connected_components(graph, engine, config, **parameters)


class CommunityDetection(BaseAlgorithm):
    def __init__(self):
        super().__init__("community", "Label propagation community detection",
                         ("pregel", "gas-sync", "gas-async", "graph-centric", "pact"))

    def get_schema(self) -> Dict[str, Any]:
        return {"seed": 0, "max_rounds": DEFAULT_MAX_ROUNDS}

    def run(self, graph, engine, config, **parameters):
        return community_detection_lp(graph, engine, config, **parameters)


class PageRank(BaseAlgorithm):
    def __init__(self):
        super().__init__("pagerank", "PageRank in fixed-iteration or tolerance mode",
                         ("pregel", "gas-sync", "gas-async", "graph-centric", "pact"))

    def get_schema(self) -> Dict[str, Any]:
        return {
            "alpha": DEFAULT_ALPHA,
            "mode": "fixed",
            "iterations": DEFAULT_ITERATIONS,
            "tolerance": DEFAULT_TOLERANCE,
            "use_combiner": True,
        }

    def run(self, graph, engine, config, **parameters):
        return pagerank(graph, engine, config, **parameters)


class ExactClustering(BaseAlgorithm):
    def __init__(self):
        super().__init__("clustering-exact", "Exact local, average and global clustering coefficients",
                         ("pregel", "gas-sync", "graph-centric", "pact"))

    def get_schema(self) -> Dict[str, Any]:
        return {}

    def run(self, graph, engine, config, **parameters):
        return clustering_exact(graph, engine, config)


class ApproximateClustering(BaseAlgorithm):
    def __init__(self):
        super().__init__("clustering-approx", "Sampling estimate of a clustering coefficient",
                         ("pregel", "gas-sync"))

    def get_schema(self) -> Dict[str, Any]:
        return {"target": "average_local", "samples": 10000, "seed": 0}

    def run(self, graph, engine, config, **parameters):
        return clustering_approx(graph, engine=engine, config=config, **parameters)


class AlgorithmRegistry:
    """Registry of the available algorithms and the engines each runs on."""

    def __init__(self):
        self._algorithms: Dict[str, BaseAlgorithm] = {}
        self._initialize_default_algorithms()

    def register(self, algorithm: BaseAlgorithm) -> bool:
        """
        Register an algorithm.

        Args:
            algorithm: Algorithm instance

        Returns:
            True if registration successful
        """
        unknown = [engine for engine in algorithm.engines if engine not in ENGINES]
        if unknown:
            logger.error(f"Cannot register {algorithm.name}: unknown engines {unknown}")
            return False
        if algorithm.name in self._algorithms:
            logger.warning(f"Replacing registered algorithm: {algorithm.name}")
        self._algorithms[algorithm.name] = algorithm
        logger.debug(f"Registered algorithm: {algorithm.name}")
        return True

    def get(self, name: str) -> Optional[BaseAlgorithm]:
        return self._algorithms.get(name)

    def list_algorithms(self) -> List[str]:
        return list(self._algorithms.keys())

    def valid_pairs(self) -> List[Tuple[str, str]]:
        """Every supported (algorithm, engine) combination."""
        return [(name, engine) for name, algorithm in self._algorithms.items() for engine in algorithm.engines]

    def check_pair(self, name: str, engine: str) -> Tuple[BaseAlgorithm, str]:
        """Resolve an (algorithm, engine) pair; raises ArgumentError listing the valid pairs."""
        algorithm = self.get(name)
        engine = normalize_engine(engine)
        if algorithm is None or not algorithm.supports(engine):
            pairs = ", ".join(f"{a}/{e}" for a, e in self.valid_pairs())
            raise ArgumentError(f"unsupported combination {name}/{engine}; valid pairs: {pairs}")
        return algorithm, engine

    def execute(self, name: str, graph: Graph, engine: str,
                config: Optional[EngineConfig] = None,
                parameters: Optional[Dict[str, Any]] = None) -> RunResult:
        """
        Execute an algorithm by name.

        Args:
            name: Algorithm name
            graph: Input graph
            engine: Engine name
            config: Worker layout and engine options
            parameters: Algorithm parameters

        Returns:
            RunResult with the result and metrics, or the error
        """
        config = config or EngineConfig()
        metadata = {"algorithm": name, "engine": engine, "workers": config.parallelism}
        start = time.perf_counter()
        try:
            algorithm, engine = self.check_pair(name, engine)
            metadata["engine"] = engine
            result, metrics = algorithm.run(graph, engine, config, **algorithm.select_parameters(parameters or {}))
        except Exception as e:
            logger.error(f"Error executing {name} on {engine}: {e}")
            return RunResult(
                success=False,
                data=None,
                error=e,
                error_message=str(e),
                execution_time=time.perf_counter() - start,
                metadata=metadata,
            )
        return RunResult(
            success=True,
            data=result,
            metrics=metrics,
            execution_time=time.perf_counter() - start,
            metadata=metadata,
        )

    def _initialize_default_algorithms(self) -> None:
        for algorithm in (ConnectedComponents(), CommunityDetection(), PageRank(),
                          ExactClustering(), ApproximateClustering()):
            self.register(algorithm)


__all__ = [
    "AlgorithmRegistry",
    "BaseAlgorithm",
    "RunResult",
    "AlgorithmResult",
    "ClusteringResult",
    "CommunityLabeling",
    "ComponentLabeling",
    "PageRankScores",
    "checksum",
    "connected_components",
    "community_detection_lp",
    "pagerank",
    "clustering_exact",
    "clustering_approx",
    "oracle_components",
    "oracle_pagerank",
    "oracle_triangles",
    "oracle_clustering",
]
