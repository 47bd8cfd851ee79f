"""
Graph representation and edge-list I/O for polygraph.

Vertices are dense integers 0..n-1. Loading remaps arbitrary non-negative ids
in first-appearance order, drops self-loops and collapses parallel edges, so
every Graph handed to an engine is simple.
"""

from bisect import bisect_left
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union
import logging

from ..errors import ArgumentError, EdgeListParseError

logger = logging.getLogger(__name__)

COMMENT_PREFIXES = ("%", "#")

Adjacency = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class Graph:
    """Immutable adjacency structure.

    For undirected graphs every edge is stored in both directions and
    in_neighbors is the same object as out_neighbors.
    """
    n: int
    m: int
    directed: bool
    out_neighbors: Adjacency
    in_neighbors: Adjacency
    labels: Tuple[int, ...] = field(default=(), repr=False)

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Iterable[Tuple[int, int]],
                   directed: bool = False,
                   labels: Optional[Sequence[int]] = None) -> "Graph":
        """Build a simple graph, dropping self-loops and duplicate edges."""
        if num_vertices < 0:
            raise ArgumentError(f"vertex count must be non-negative, got {num_vertices}")
        out_sets: List[Set[int]] = [set() for _ in range(num_vertices)]
        in_sets: List[Set[int]] = [set() for _ in range(num_vertices)] if directed else out_sets
        for u, v in edges:
            if not (0 <= u < num_vertices and 0 <= v < num_vertices):
                raise ArgumentError(f"edge ({u}, {v}) outside 0..{num_vertices - 1}")
            if u == v:
                continue
            out_sets[u].add(v)
            in_sets[v].add(u)
        out_neighbors = tuple(tuple(sorted(s)) for s in out_sets)
        if directed:
            in_neighbors = tuple(tuple(sorted(s)) for s in in_sets)
            m = sum(len(a) for a in out_neighbors)
        else:
            in_neighbors = out_neighbors
            m = sum(len(a) for a in out_neighbors) // 2
        return cls(
            n=num_vertices,
            m=m,
            directed=directed,
            out_neighbors=out_neighbors,
            in_neighbors=in_neighbors,
            labels=tuple(labels) if labels is not None else (),
        )

    def neighbors(self, v: int) -> Tuple[int, ...]:
        """Out-neighbors (all neighbors for undirected graphs)."""
        return self.out_neighbors[v]

    def all_neighbors(self, v: int) -> Tuple[int, ...]:
        """Sorted union of in- and out-neighbors."""
        if not self.directed:
            return self.out_neighbors[v]
        return tuple(sorted(set(self.out_neighbors[v]).union(self.in_neighbors[v])))

    def out_degree(self, v: int) -> int:
        return len(self.out_neighbors[v])

    def in_degree(self, v: int) -> int:
        return len(self.in_neighbors[v])

    def degree(self, v: int) -> int:
        if self.directed:
            return len(self.out_neighbors[v]) + len(self.in_neighbors[v])
        return len(self.out_neighbors[v])

    def has_edge(self, u: int, v: int) -> bool:
        row = self.out_neighbors[u]
        i = bisect_left(row, v)
        return i < len(row) and row[i] == v

    @cached_property
    def _offsets(self) -> Tuple[int, ...]:
        offsets = [0]
        for row in self.out_neighbors:
            offsets.append(offsets[-1] + len(row))
        return tuple(offsets)

    @property
    def num_edge_slots(self) -> int:
        """Number of stored directed adjacency entries (m, or 2m if undirected)."""
        return self._offsets[-1]

    def edge_id(self, u: int, v: int) -> int:
        """CSR slot of the stored entry u -> v."""
        row = self.out_neighbors[u]
        i = bisect_left(row, v)
        if i == len(row) or row[i] != v:
            raise KeyError((u, v))
        return self._offsets[u] + i

    def edge_slot(self, u: int, position: int) -> int:
        """CSR slot of the position-th out-neighbor of u."""
        return self._offsets[u] + position

    def edges(self) -> Iterator[Tuple[int, int]]:
        """Every edge once; undirected edges as (u, v) with u < v."""
        for u, row in enumerate(self.out_neighbors):
            for v in row:
                if self.directed or u < v:
                    yield u, v

    def symmetrize(self) -> "Graph":
        """Undirected view of a directed graph (identity on undirected graphs)."""
        if not self.directed:
            return self
        return Graph.from_edges(self.n, self.edges(), directed=False, labels=self.labels or None)

    def as_directed(self) -> "Graph":
        """Directed graph with both arcs of every undirected edge (identity on directed graphs)."""
        if self.directed:
            return self
        arcs = [(u, v) for u, row in enumerate(self.out_neighbors) for v in row]
        return Graph.from_edges(self.n, arcs, directed=True, labels=self.labels or None)

    def original_id(self, v: int) -> int:
        return self.labels[v] if self.labels else v

    def validate(self) -> None:
        """Check the structural invariants; raises ArgumentError on violation."""
        total = sum(len(row) for row in self.out_neighbors)
        expected = self.m if self.directed else 2 * self.m
        if total != expected:
            raise ArgumentError(f"adjacency holds {total} entries, expected {expected}")
        for v, row in enumerate(self.out_neighbors):
            if any(a >= b for a, b in zip(row, row[1:])):
                raise ArgumentError(f"neighbor list of {v} is not strictly increasing")
            if v in row:
                raise ArgumentError(f"self-loop at {v}")
            if not self.directed:
                for u in row:
                    if not self.has_edge(u, v):
                        raise ArgumentError(f"asymmetric edge {v} -> {u}")


def _lines(source: Union[BinaryIO, bytes, str, Iterable[Union[bytes, str]]]) -> Iterator[Tuple[int, str]]:
    if isinstance(source, (bytes, str)):
        source = source.splitlines() if source else []
    for line_number, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                raise EdgeListParseError(line_number, raw.decode("utf-8", errors="replace"),
                                         "invalid UTF-8") from None
        yield line_number, raw


def load_edge_list(source: Union[BinaryIO, bytes, str, Iterable[Union[bytes, str]]],
                   directed: bool = False) -> Graph:
    """
    Parse a whitespace-separated "u v" edge list.

    Lines starting with '%' or '#' and blank lines are skipped. Vertex ids are
    remapped to 0..n-1 in order of first appearance; a self-loop line still
    registers its vertex.

    Args:
        source: Binary stream, bytes, text or an iterable of lines
        directed: Whether "u v" means u -> v only

    Returns:
        The deduplicated Graph, with the original ids kept as labels
    """
    remap: Dict[int, int] = {}
    labels: List[int] = []
    edges: List[Tuple[int, int]] = []

    def dense(raw_id: int) -> int:
        index = remap.get(raw_id)
        if index is None:
            index = len(labels)
            remap[raw_id] = index
            labels.append(raw_id)
        return index

    for line_number, line in _lines(source):
        stripped = line.strip()
        if not stripped or stripped.startswith(COMMENT_PREFIXES):
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise EdgeListParseError(line_number, line, f"expected 2 fields, found {len(tokens)}")
        try:
            u, v = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise EdgeListParseError(line_number, line, "vertex ids must be integers") from None
        if u < 0 or v < 0:
            raise EdgeListParseError(line_number, line, "vertex ids must be non-negative")
        edges.append((dense(u), dense(v)))

    graph = Graph.from_edges(len(labels), edges, directed=directed, labels=labels)
    logger.info(f"Loaded edge list: n={graph.n} m={graph.m} directed={directed}")
    return graph


def load_edge_list_file(path: Union[str, Path], directed: bool = False) -> Graph:
    """Load an edge list from a file path."""
    with open(path, "rb") as handle:
        return load_edge_list(handle, directed=directed)


def serialize_edge_list(graph: Graph, sink: BinaryIO) -> None:
    """Write graph in the edge-list format, comment header first, original ids."""
    kind = "directed" if graph.directed else "undirected"
    sink.write(f"% {kind} n={graph.n} m={graph.m}\n".encode("utf-8"))
    for u, v in graph.edges():
        sink.write(f"{graph.original_id(u)} {graph.original_id(v)}\n".encode("utf-8"))


from .generators import (  # noqa: E402
    complete_graph,
    cycle_graph,
    generate_dorogovtsev_mendes,
    generate_erdos_renyi,
    path_graph,
    star_graph,
)
from .partition import (  # noqa: E402
    BlockSubgraph,
    PartitionAssignment,
    build_block_subgraph,
    partition_hash,
    partition_range,
)

__all__ = [
    "Graph",
    "load_edge_list",
    "load_edge_list_file",
    "serialize_edge_list",
    "generate_dorogovtsev_mendes",
    "generate_erdos_renyi",
    "path_graph",
    "star_graph",
    "complete_graph",
    "cycle_graph",
    "PartitionAssignment",
    "BlockSubgraph",
    "partition_hash",
    "partition_range",
    "build_block_subgraph",
]
