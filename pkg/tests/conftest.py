"""
Shared fixtures for the polygraph tests.
"""

import pytest

from polygraph.config import get_settings
from polygraph.graph import Graph, complete_graph, cycle_graph, generate_erdos_renyi, path_graph, star_graph


def two_triangles() -> Graph:
    """Triangles {0,1,2} and {3,4,5} joined by the bridge 2-3."""
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


def disjoint_pieces() -> Graph:
    """Path 0-1-2, edge 3-4, isolated vertex 5 and triangle 6-7-8."""
    return Graph.from_edges(9, [(0, 1), (1, 2), (3, 4), (6, 7), (7, 8), (6, 8)])


def bundled_graphs():
    """Small undirected graphs every engine is checked against."""
    return {
        "triangle": complete_graph(3),
        "edge": path_graph(2),
        "path": path_graph(10),
        "cycle": cycle_graph(9),
        "star": star_graph(6),
        "k5": complete_graph(5),
        "two_triangles": two_triangles(),
        "pieces": disjoint_pieces(),
        "gnp": generate_erdos_renyi(40, 0.1, seed=3),
    }


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Settings come from a clean environment and checkpoints go to a temporary directory."""
    for name in ("MAX_SUPERSTEPS", "MAX_ASYNC_UPDATES", "MAX_MESSAGES_PER_SUPERSTEP",
                 "ORACLE_MAX_VERTICES", "STRICT_CHECKPOINTS", "LOG_LEVEL"):
        monkeypatch.delenv(f"POLYGRAPH_{name}", raising=False)
    monkeypatch.setenv("POLYGRAPH_CHECKPOINT_DIR", str(tmp_path / "checkpoints"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
