"""
Synthetic graph generators.

All randomness goes through numpy's seeded Generator so a (size, seed) pair
always yields the same edge set.
"""

from typing import List, Tuple
import logging

import numpy as np

from ..errors import ArgumentError
from . import Graph

logger = logging.getLogger(__name__)


def generate_dorogovtsev_mendes(target_vertices: int, seed: int = 0) -> Graph:
    """
    Grow an undirected scale-free graph from a triangle.

    Each new vertex picks one existing edge uniformly at random and connects
    to both of its endpoints, so the result has 2n - 3 edges and is connected.

    Args:
        target_vertices: Final vertex count (at least 3)
        seed: Seed for the random generator

    Returns:
        Generated Graph
    """
    if target_vertices < 3:
        raise ArgumentError(f"Dorogovtsev-Mendes needs at least 3 vertices, got {target_vertices}")

    rng = np.random.default_rng(seed)
    draws = rng.random(target_vertices - 3)
    edges: List[Tuple[int, int]] = [(0, 1), (1, 2), (0, 2)]
    for offset, draw in enumerate(draws):
        new_vertex = offset + 3
        a, b = edges[int(draw * len(edges))]
        edges.append((a, new_vertex))
        edges.append((b, new_vertex))

    graph = Graph.from_edges(target_vertices, edges, directed=False)
    logger.info(f"Generated Dorogovtsev-Mendes graph: n={graph.n} m={graph.m} seed={seed}")
    return graph


def generate_erdos_renyi(n: int, p: float, seed: int = 0, directed: bool = False) -> Graph:
    """Seeded G(n, p): every (ordered, if directed) vertex pair is an edge with probability p."""
    if n < 0:
        raise ArgumentError(f"vertex count must be non-negative, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"edge probability must be in [0, 1], got {p}")

    rng = np.random.default_rng(seed)
    if directed:
        rows, cols = np.nonzero(~np.eye(n, dtype=bool))
    else:
        rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(len(rows)) < p
    edges = zip(rows[keep].tolist(), cols[keep].tolist())
    return Graph.from_edges(n, edges, directed=directed)


def path_graph(n: int, directed: bool = False) -> Graph:
    """0 - 1 - ... - (n-1)."""
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)), directed=directed)


def cycle_graph(n: int, directed: bool = False) -> Graph:
    edges = [(i, (i + 1) % n) for i in range(n)] if n >= 2 else []
    return Graph.from_edges(n, edges, directed=directed)


def star_graph(leaves: int, directed: bool = False, inward: bool = True) -> Graph:
    """
    Hub 0 with leaves 1..leaves.

    For directed stars, inward=True points every edge leaf -> hub.
    """
    if inward:
        edges = [(leaf, 0) for leaf in range(1, leaves + 1)]
    else:
        edges = [(0, leaf) for leaf in range(1, leaves + 1)]
    return Graph.from_edges(leaves + 1, edges, directed=directed)


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, ((u, v) for u in range(n) for v in range(u + 1, n)), directed=False)
