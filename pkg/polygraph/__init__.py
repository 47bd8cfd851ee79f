"""
polygraph: graph analysis across four distributed programming models

Pregel/BSP, Gather-Apply-Scatter, graph-centric blocks and PACT dataflows
run over a deterministic simulated worker cluster, together with connected
components, community detection, PageRank and clustering coefficients
expressed in each model, brute-force oracles and a benchmark CLI.
"""

__version__ = "0.1.0"
__license__ = "Apache 2.0"

from .graph import Graph, load_edge_list, load_edge_list_file, serialize_edge_list
from .cluster import RunMetrics
from .engines import EngineConfig
from .algorithms import (
    AlgorithmRegistry,
    clustering_approx,
    clustering_exact,
    community_detection_lp,
    connected_components,
    pagerank,
)
from .dashboard import Dashboard

__all__ = [
    "AlgorithmRegistry",
    "Dashboard",
    "EngineConfig",
    "Graph",
    "RunMetrics",
    "clustering_approx",
    "clustering_exact",
    "community_detection_lp",
    "connected_components",
    "load_edge_list",
    "load_edge_list_file",
    "pagerank",
    "serialize_edge_list",
]
