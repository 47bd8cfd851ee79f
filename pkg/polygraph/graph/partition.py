"""
Vertex partitioning into worker blocks.

A PartitionAssignment maps each vertex to exactly one of k blocks. The
BlockSubgraph of a block holds its internal (owned) vertices, the boundary
vertices adjacent to them and every edge touching an internal vertex.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Tuple
import logging

import numpy as np

from ..errors import ArgumentError
from . import Graph
from .hashing import hash_ids

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionAssignment:
    """owner[v] is the block (worker) that owns vertex v."""
    k: int
    owner: Tuple[int, ...]

    def __post_init__(self):
        if self.k < 1:
            raise ArgumentError(f"block count must be positive, got {self.k}")
        for v, block in enumerate(self.owner):
            if not 0 <= block < self.k:
                raise ArgumentError(f"vertex {v} assigned to block {block}, outside 0..{self.k - 1}")

    @property
    def n(self) -> int:
        return len(self.owner)

    def members(self, block: int) -> List[int]:
        """Vertices owned by block, ascending."""
        return [v for v, b in enumerate(self.owner) if b == block]

    def block_sizes(self) -> List[int]:
        return np.bincount(np.asarray(self.owner, dtype=np.int64), minlength=self.k).tolist()


def partition_hash(graph: Graph, k: int, seed: int = 0) -> PartitionAssignment:
    """owner(v) = hash_pair(seed, v) mod k."""
    if k < 1:
        raise ArgumentError(f"block count must be positive, got {k}")
    hashed = hash_ids(np.arange(graph.n, dtype=np.uint64), seed)
    owner = (hashed % np.uint64(k)).astype(np.int64)
    return PartitionAssignment(k=k, owner=tuple(owner.tolist()))


def partition_range(graph: Graph, k: int) -> PartitionAssignment:
    """Contiguous id ranges of near-equal size; block b owns ids [b*n/k, (b+1)*n/k)."""
    if k < 1:
        raise ArgumentError(f"block count must be positive, got {k}")
    owner = tuple((v * k) // graph.n for v in range(graph.n)) if graph.n else ()
    return PartitionAssignment(k=k, owner=owner)


@dataclass(frozen=True)
class BlockSubgraph:
    """
    One block's view of the graph.

    out_adjacency / in_adjacency hold the full neighbor lists of internal
    vertices only; together they cover every edge with an internal endpoint.
    """
    block: int
    internal_vertices: FrozenSet[int]
    boundary_vertices: FrozenSet[int]
    out_adjacency: Dict[int, Tuple[int, ...]]
    in_adjacency: Dict[int, Tuple[int, ...]]

    @property
    def vertices(self) -> FrozenSet[int]:
        return self.internal_vertices | self.boundary_vertices

    def is_internal(self, v: int) -> bool:
        return v in self.internal_vertices

    def edges(self) -> List[Tuple[int, int]]:
        """Directed edges with at least one internal endpoint, each once."""
        found = set()
        for u, row in self.out_adjacency.items():
            found.update((u, v) for v in row)
        for v, row in self.in_adjacency.items():
            found.update((u, v) for u in row)
        return sorted(found)


def build_block_subgraph(graph: Graph, assignment: PartitionAssignment, block: int) -> BlockSubgraph:
    """
    Build the subgraph of a block: its internal vertices plus all adjacent vertices.

    Args:
        graph: Partitioned graph
        assignment: Vertex ownership
        block: Block id, 0 <= block < k

    Returns:
        BlockSubgraph for the block
    """
    if not 0 <= block < assignment.k:
        raise ArgumentError(f"block {block} outside 0..{assignment.k - 1}")
    if assignment.n != graph.n:
        raise ArgumentError(f"assignment covers {assignment.n} vertices, graph has {graph.n}")

    internal = assignment.members(block)
    internal_set = frozenset(internal)
    boundary = set()
    out_adjacency: Dict[int, Tuple[int, ...]] = {}
    in_adjacency: Dict[int, Tuple[int, ...]] = {}
    for v in internal:
        out_adjacency[v] = graph.out_neighbors[v]
        in_adjacency[v] = graph.in_neighbors[v]
        boundary.update(u for u in graph.out_neighbors[v] if u not in internal_set)
        boundary.update(u for u in graph.in_neighbors[v] if u not in internal_set)

    logger.debug(f"Block {block}: {len(internal_set)} internal, {len(boundary)} boundary vertices")
    return BlockSubgraph(
        block=block,
        internal_vertices=internal_set,
        boundary_vertices=frozenset(boundary),
        out_adjacency=out_adjacency,
        in_adjacency=in_adjacency,
    )
