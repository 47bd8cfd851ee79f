"""
Brute-force reference implementations.

These share no code with the engines: union-find for components, dense
matrix iteration for PageRank and adjacency-matrix triple counting for
triangles. They refuse graphs above the configured oracle size.
"""

from typing import Dict, List, Tuple
import logging
import math

import numpy as np

from ..config import get_settings
from ..errors import ArgumentError
from ..graph import Graph
from .results import ComponentLabeling, PageRankScores

logger = logging.getLogger(__name__)


def _check_size(graph: Graph) -> None:
    limit = get_settings().oracle_max_vertices
    if graph.n > limit:
        raise ArgumentError(f"oracle limited to {limit} vertices, graph has {graph.n}")


class DisjointSet:
    """Union-find over 0..n-1 with path compression; the root is always the smallest member."""

    def __init__(self, n: int):
        self._parents = list(range(n))

    def find(self, item: int) -> int:
        root = item
        while self._parents[root] != root:
            root = self._parents[root]
        while self._parents[item] != root:
            self._parents[item], item = root, self._parents[item]
        return root

    def union(self, first: int, second: int) -> None:
        first, second = self.find(first), self.find(second)
        if first == second:
            return
        if second < first:
            first, second = second, first
        self._parents[second] = first


def oracle_components(graph: Graph) -> ComponentLabeling:
    """Minimum vertex id of each vertex's (weakly) connected component."""
    _check_size(graph)
    components = DisjointSet(graph.n)
    for u, v in graph.edges():
        components.union(u, v)
    return ComponentLabeling([components.find(v) for v in range(graph.n)])


def oracle_pagerank(graph: Graph, alpha: float, iterations: int) -> PageRankScores:
    """
    Dense iteration of P(v) = alpha + (1 - alpha) * sum(P(u) / outdeg(u)) from P = 1.

    Sinks pass nothing on. Undirected edges count in both directions.
    """
    _check_size(graph)
    if not 0.0 < alpha < 1.0:
        raise ArgumentError(f"alpha must be in (0, 1), got {alpha}")
    n = graph.n
    transfer = np.zeros((n, n))
    for u in range(n):
        targets = graph.out_neighbors[u]
        for v in targets:
            transfer[v, u] = 1.0 / len(targets)
    ranks = np.ones(n)
    for _ in range(iterations):
        ranks = alpha + (1.0 - alpha) * (transfer @ ranks)
    return PageRankScores(ranks.tolist(), alpha, "fixed", iterations)


def oracle_triangles(graph: Graph) -> Tuple[List[int], int, int]:
    """
    Per-vertex triangle counts from the adjacency matrix.

    Returns:
        (delta per vertex, total triangles, connected triplets)
    """
    _check_size(graph)
    if graph.directed:
        graph = graph.symmetrize()
    n = graph.n
    adjacency = np.zeros((n, n))
    for u, v in graph.edges():
        adjacency[u, v] = adjacency[v, u] = 1.0
    # (A @ A)[u, v] counts paths u-w-v; closing them with A[u, v] counts each triangle at u twice.
    closed = ((adjacency @ adjacency) * adjacency).sum(axis=1)
    delta = [int(round(x)) // 2 for x in closed]
    degrees = adjacency.sum(axis=1)
    triplets = int(sum(int(d) * (int(d) - 1) // 2 for d in degrees))
    return delta, sum(delta) // 3, triplets


def oracle_clustering(graph: Graph) -> Dict[str, float]:
    """Average local and global coefficients derived from oracle_triangles."""
    delta, triangles, triplets = oracle_triangles(graph)
    local = []
    for v in range(graph.n):
        degree = len(graph.all_neighbors(v))
        if degree >= 2:
            local.append(delta[v] / (degree * (degree - 1) // 2))
    return {
        "average_local": math.fsum(local) / len(local) if local else 0.0,
        "global": 3 * triangles / triplets if triplets else 0.0,
        "triangles": triangles,
        "triplets": triplets,
    }
