"""
Tests for the graph analyses on every engine, checked against the oracles.
"""

import networkx as nx
import pytest

from polygraph.algorithms import (
    AlgorithmRegistry, clustering_approx, clustering_exact, community_detection_lp, connected_components,
    oracle_clustering, oracle_components, oracle_pagerank, pagerank,
)
from polygraph.algorithms.community import detect_period, initial_label, most_frequent_label, satisfies_fixpoint
from polygraph.algorithms.results import ComponentLabeling, checksum
from polygraph.engines import ENGINES, EngineConfig
from polygraph.errors import ArgumentError
from polygraph.graph import (
    Graph, complete_graph, generate_dorogovtsev_mendes, generate_erdos_renyi, path_graph, star_graph,
)

from conftest import bundled_graphs, two_triangles

WORKERS = (1, 2, 4, 8)
PAGERANK_ENGINES = ("pregel", "gas-sync", "graph-centric", "pact")
CLUSTERING_ENGINES = ("pregel", "gas-sync", "graph-centric", "pact")


def to_networkx(graph: Graph) -> nx.Graph:
    reference = nx.Graph()
    reference.add_nodes_from(range(graph.n))
    reference.add_edges_from(graph.edges())
    return reference


@pytest.mark.integration
class TestConnectedComponents:
    """Test cases for connected components on every engine."""

    @pytest.mark.parametrize("engine", ENGINES)
    def test_matches_oracle(self, engine):
        for name, graph in bundled_graphs().items():
            expected = oracle_components(graph).labels
            for workers in WORKERS:
                result, metrics = connected_components(graph, engine, EngineConfig(workers=workers))
                assert result.labels == expected, f"{name} with {workers} workers"
                assert metrics.converged

    def test_range_partitioning(self):
        graph = generate_erdos_renyi(60, 0.04, seed=9)
        result, _ = connected_components(graph, "graph-centric", EngineConfig(workers=3, partitioner="range"))

        assert result.labels == oracle_components(graph).labels

    def test_agrees_with_networkx(self):
        graph = generate_erdos_renyi(80, 0.03, seed=1)
        result, _ = connected_components(graph, "pregel", EngineConfig(workers=4))

        components = {frozenset(c) for c in nx.connected_components(to_networkx(graph))}
        assert {frozenset(v for v in range(graph.n) if result.labels[v] == label)
                for label in set(result.labels)} == components

    def test_directed_input_rejected(self):
        with pytest.raises(ArgumentError):
            connected_components(path_graph(3, directed=True), "pregel")

    def test_block_engine_needs_few_supersteps_on_long_paths(self):
        graph = path_graph(64)
        config = EngineConfig(workers=4, partitioner="range")

        blocks, block_metrics = connected_components(graph, "graph-centric", config)
        vertices, vertex_metrics = connected_components(graph, "pregel", config)

        assert blocks.labels == vertices.labels == [0] * 64
        assert block_metrics.supersteps <= 5
        assert vertex_metrics.supersteps >= 32
        assert block_metrics.messages_delivered < vertex_metrics.messages_delivered

    def test_async_needs_no_more_updates_than_sync(self):
        graph = generate_erdos_renyi(100, 0.03, seed=6)
        config = EngineConfig(workers=4)

        _, sync = connected_components(graph, "gas-sync", config)
        _, asynchronous = connected_components(graph, "gas-async", config)

        assert asynchronous.vertex_updates <= sync.vertex_updates

    def test_recovers_from_injected_failure(self, tmp_path):
        graph = path_graph(12)
        config = EngineConfig(workers=4, checkpoint_every=2, checkpoint_dir=tmp_path, kill_at_superstep=5)

        result, metrics = connected_components(graph, "pregel", config)

        assert result.labels == [0] * 12
        assert metrics.recoveries == 1

    def test_fault_injection_rejected_on_gas(self):
        with pytest.raises(ArgumentError):
            connected_components(path_graph(4), "gas-sync", EngineConfig(kill_at_superstep=1))


@pytest.mark.integration
class TestPageRank:
    """Test cases for PageRank in both modes."""

    def setup_method(self):
        self.graphs = dict(bundled_graphs())
        self.graphs["directed"] = generate_erdos_renyi(40, 0.08, seed=12, directed=True)

    @pytest.mark.parametrize("engine", PAGERANK_ENGINES)
    def test_fixed_mode_matches_oracle(self, engine):
        for name, graph in self.graphs.items():
            expected = oracle_pagerank(graph.as_directed(), 0.15, 10).scores
            for workers in WORKERS:
                result, _ = pagerank(graph, engine, EngineConfig(workers=workers), iterations=10)
                assert result.scores == pytest.approx(expected, abs=1e-10), f"{name} with {workers} workers"
                assert result.iterations == 10

    @pytest.mark.parametrize("engine", PAGERANK_ENGINES + ("gas-async",))
    def test_tolerance_mode_reaches_fixpoint(self, engine):
        graph = self.graphs["directed"]
        expected = oracle_pagerank(graph, 0.15, 300).scores

        result, metrics = pagerank(graph, engine, EngineConfig(workers=4), mode="tolerance", tolerance=1e-10)

        assert result.scores == pytest.approx(expected, abs=1e-6)
        assert result.max_delta <= 1e-10
        assert metrics.converged

    def test_combiner_reduces_remote_messages(self):
        graph = star_graph(100, directed=True)
        config = EngineConfig(workers=4)

        plain, plain_metrics = pagerank(graph, "pregel", config, alpha=0.25, iterations=5, use_combiner=False)
        combined, combined_metrics = pagerank(graph, "pregel", config, alpha=0.25, iterations=5)

        assert combined.scores == plain.scores
        assert combined_metrics.messages_remote < plain_metrics.messages_remote
        assert combined.scores[0] == pytest.approx(0.25 + 0.75 * 100 * 0.25)

    def test_sources_keep_base_rank(self):
        graph = star_graph(3, directed=True)

        result, _ = pagerank(graph, "pact", alpha=0.2, iterations=3)

        assert result.scores[1:] == pytest.approx([0.2, 0.2, 0.2])

    def test_invalid_parameters(self):
        graph = path_graph(3)
        with pytest.raises(ArgumentError):
            pagerank(graph, alpha=1.0)
        with pytest.raises(ArgumentError):
            pagerank(graph, mode="forever")
        with pytest.raises(ArgumentError):
            pagerank(graph, iterations=0)
        with pytest.raises(ArgumentError):
            pagerank(graph, mode="tolerance", tolerance=0.0)

    def test_async_requires_tolerance_mode(self):
        with pytest.raises(ArgumentError):
            pagerank(path_graph(3), "gas-async")


@pytest.mark.integration
class TestClustering:
    """Test cases for exact and sampled clustering coefficients."""

    @pytest.mark.parametrize("engine", CLUSTERING_ENGINES)
    def test_exact_matches_oracle(self, engine):
        for name, graph in bundled_graphs().items():
            expected = oracle_clustering(graph)
            for workers in WORKERS:
                result, _ = clustering_exact(graph, engine, EngineConfig(workers=workers))
                assert result.triangles == expected["triangles"], name
                assert result.triplets == expected["triplets"], name
                assert result.average_local == pytest.approx(expected["average_local"], abs=1e-12)
                assert result.global_coefficient == pytest.approx(expected["global"], abs=1e-12)

    def test_complete_and_star(self):
        triangle, _ = clustering_exact(complete_graph(3))
        star, _ = clustering_exact(star_graph(4))

        assert triangle.average_local == 1.0
        assert triangle.global_coefficient == 1.0
        assert star.average_local == 0.0
        assert star.global_coefficient == 0.0
        assert star.local == {0: 0.0}

    def test_agrees_with_networkx(self):
        graph = two_triangles()
        result, _ = clustering_exact(graph, "graph-centric", EngineConfig(workers=2))
        reference = to_networkx(graph)

        expected_local = nx.clustering(reference)
        for v, value in result.local.items():
            assert value == pytest.approx(expected_local[v])
        assert result.global_coefficient == pytest.approx(nx.transitivity(reference))

    def test_sampling_is_seeded(self):
        graph = two_triangles()

        first, _ = clustering_approx(graph, samples=500, seed=3, engine="pregel", config=EngineConfig(workers=2))
        second, _ = clustering_approx(graph, samples=500, seed=3, engine="gas-sync", config=EngineConfig(workers=3))

        assert first.hits == second.hits

    def test_sampling_needs_a_vertex_of_degree_two(self):
        with pytest.raises(ArgumentError):
            clustering_approx(path_graph(2), samples=10)

    def test_unknown_target(self):
        with pytest.raises(ArgumentError):
            clustering_approx(two_triangles(), target="median")


@pytest.mark.integration
class TestCommunityDetection:
    """Test cases for label propagation."""

    def test_single_edge_oscillates_on_synchronous_engines(self):
        graph = path_graph(2)

        for engine in ("pregel", "gas-sync", "pact"):
            result, metrics = community_detection_lp(graph, engine, max_rounds=20)
            assert not result.converged, engine
            assert not metrics.converged, engine
            assert result.oscillation_period == 2, engine

    def test_single_edge_settles_asynchronously(self):
        result, metrics = community_detection_lp(path_graph(2), "gas-async")

        assert result.converged
        assert result.labels[0] == result.labels[1]

    @pytest.mark.parametrize("engine", ("pregel", "gas-sync", "graph-centric", "pact"))
    def test_synchronous_runs_settle_or_report_a_period(self, engine):
        graph = two_triangles()

        result, _ = community_detection_lp(graph, engine, EngineConfig(workers=2), seed=1)

        assert result.converged or result.oscillation_period is not None
        assert not result.converged or satisfies_fixpoint(graph, result.labels)

    @pytest.mark.parametrize("workers", (1, 2, 4))
    def test_async_labels_each_triangle_uniformly(self, workers):
        graph = two_triangles()

        for seed in range(10):
            result, metrics = community_detection_lp(graph, "gas-async", EngineConfig(workers=workers), seed=seed)

            assert result.converged
            assert metrics.converged
            assert satisfies_fixpoint(graph, result.labels)
            assert len(set(result.labels[:3])) == 1
            assert len(set(result.labels[3:])) == 1

    def test_synchronous_engines_agree(self):
        graph = generate_erdos_renyi(50, 0.08, seed=3)
        results = [community_detection_lp(graph, engine, EngineConfig(workers=workers), seed=2)[0]
                   for engine in ("pregel", "gas-sync", "graph-centric", "pact") for workers in (1, 3)]
        settled = [result.labels for result in results if result.converged]

        # Oscillating runs may stop in different phases; settled ones must agree.
        assert all(labels == settled[0] for labels in settled)
        assert len({result.converged for result in results}) == 1

    def test_not_available_on_message_engine(self):
        with pytest.raises(ArgumentError):
            community_detection_lp(path_graph(3), "gas-message")

    def test_most_frequent_label_rule(self):
        assert most_frequent_label(4, {4: 2, 1: 2}) == 1
        assert most_frequent_label(1, {4: 2, 1: 2}) == 1
        assert most_frequent_label(4, {3: 2, 1: 2, 4: 1}) == 1
        assert most_frequent_label(4, {}) == 4

    def test_initial_label_is_a_seeded_neighbor_draw(self):
        graph = star_graph(6)
        hub_labels = [initial_label(graph, 0, seed) for seed in range(200)]

        assert set(hub_labels) == set(graph.out_neighbors[0])
        assert hub_labels == [initial_label(graph, 0, seed) for seed in range(200)]
        assert all(initial_label(graph, leaf, 5) == 0 for leaf in graph.out_neighbors[0])

    def test_initial_label_of_isolated_vertex_is_its_id(self):
        graph = Graph.from_edges(3, [(0, 1)])

        assert initial_label(graph, 2, 9) == 2

    def test_negative_seed_rejected(self):
        with pytest.raises(ArgumentError):
            community_detection_lp(path_graph(3), seed=-1)

    def test_detect_period(self):
        assert detect_period([5, 1, 2, 1, 2]) == 2
        assert detect_period([5, 1, 1]) == 1
        assert detect_period([1, 2, 3]) is None


def random_undirected_graphs(count: int):
    for seed in range(count):
        n = 5 + (seed * 37) % 96
        yield generate_erdos_renyi(n, (1 + seed % 5) / n, seed=seed)


def random_directed_graphs(count: int):
    for seed in range(count):
        n = 5 + (seed * 53) % 96
        yield generate_erdos_renyi(n, (1 + seed % 4) / n, seed=1000 + seed, directed=True)


@pytest.mark.slow
class TestAtScale:
    """Test cases over many random graphs and larger generated graphs."""

    @pytest.mark.parametrize("engine", ENGINES)
    def test_components_on_random_graphs(self, engine):
        for index, graph in enumerate(random_undirected_graphs(100)):
            workers = WORKERS[index % len(WORKERS)]
            result, metrics = connected_components(graph, engine, EngineConfig(workers=workers))
            assert result.labels == oracle_components(graph).labels, f"graph {index} with {workers} workers"
            assert metrics.converged

    @pytest.mark.parametrize("engine", PAGERANK_ENGINES)
    def test_fixed_pagerank_on_random_graphs(self, engine):
        for index, graph in enumerate(random_directed_graphs(50)):
            expected = oracle_pagerank(graph, 0.15, 10).scores
            for workers in (1, 4):
                result, _ = pagerank(graph, engine, EngineConfig(workers=workers), iterations=10)
                assert result.scores == pytest.approx(expected, abs=1e-10), f"graph {index} with {workers} workers"

    @pytest.mark.parametrize("engine", PAGERANK_ENGINES + ("gas-async",))
    def test_tolerance_pagerank_on_random_graphs(self, engine):
        tolerance = 1e-9
        for index, graph in enumerate(random_directed_graphs(50)):
            for workers in (1, 4):
                result, metrics = pagerank(graph, engine, EngineConfig(workers=workers),
                                           mode="tolerance", tolerance=tolerance)
                assert result.max_delta <= tolerance, f"graph {index} with {workers} workers"
                assert metrics.converged

    @pytest.mark.parametrize("engine", CLUSTERING_ENGINES)
    def test_exact_clustering_on_random_graphs(self, engine):
        for index, graph in enumerate(random_undirected_graphs(50)):
            expected = oracle_clustering(graph)
            result, _ = clustering_exact(graph, engine, EngineConfig(workers=1 + index % 4))
            assert result.triangles == expected["triangles"], f"graph {index}"
            assert result.average_local == pytest.approx(expected["average_local"], abs=1e-12)
            assert result.global_coefficient == pytest.approx(expected["global"], abs=1e-12)

    @pytest.mark.parametrize("target", ("average_local", "global"))
    def test_sampling_estimates_are_close(self, target):
        graph = generate_dorogovtsev_mendes(2000, seed=4)
        expected = oracle_clustering(graph)[target]

        close = 0
        for seed in range(20):
            engine = ("pregel", "gas-sync")[seed % 2]
            result, _ = clustering_approx(graph, target, samples=100_000, seed=seed, engine=engine,
                                          config=EngineConfig(workers=4))
            assert result.samples == 100_000
            close += abs(result.estimate - expected) <= 0.02

        assert close >= 19

    def test_async_components_save_updates(self):
        graph = generate_dorogovtsev_mendes(5000, seed=8)
        config = EngineConfig(workers=4)

        _, sync = connected_components(graph, "gas-sync", config)
        _, asynchronous = connected_components(graph, "gas-async", config)

        assert asynchronous.vertex_updates <= 0.9 * sync.vertex_updates


@pytest.mark.integration
class TestDataflowParallelism:
    """Dataflow results do not depend on the parallelism."""

    def test_checksums_independent_of_parallelism(self):
        graph = generate_erdos_renyi(60, 0.08, seed=13)
        runs = {
            "cc": lambda config: connected_components(graph, "pact", config),
            "pagerank": lambda config: pagerank(graph, "pact", config, iterations=15),
            "clustering": lambda config: clustering_exact(graph, "pact", config),
            "community": lambda config: community_detection_lp(graph, "pact", config),
        }

        for name, run in runs.items():
            single, _ = run(EngineConfig(workers=1))
            spread, _ = run(EngineConfig(workers=8))
            assert single.checksum() == spread.checksum(), name


@pytest.mark.unit
class TestAlgorithmRegistry:
    """Test cases for AlgorithmRegistry."""

    def setup_method(self):
        self.registry = AlgorithmRegistry()

    def test_default_algorithms(self):
        assert self.registry.list_algorithms() == [
            "cc", "community", "pagerank", "clustering-exact", "clustering-approx",
        ]
        assert ("cc", "gas-message") in self.registry.valid_pairs()
        assert ("clustering-approx", "pact") not in self.registry.valid_pairs()

    def test_execute_success(self):
        result = self.registry.execute("cc", two_triangles(), "graphcentric", EngineConfig(workers=2))

        assert result.success
        assert result.data.labels == [0] * 6
        assert result.metadata["engine"] == "graph-centric"
        assert result.metrics.supersteps > 0

    def test_execute_reports_unsupported_pair(self):
        result = self.registry.execute("clustering-approx", two_triangles(), "pact")

        assert not result.success
        assert isinstance(result.error, ArgumentError)
        assert "valid pairs" in result.error_message

    def test_execute_reports_bad_parameters(self):
        result = self.registry.execute("pagerank", two_triangles(), "pregel", parameters={"alpha": 2.0})

        assert not result.success
        assert isinstance(result.error, ArgumentError)

    def test_unknown_parameters_are_ignored(self):
        result = self.registry.execute("cc", two_triangles(), "pregel", parameters={"alpha": 0.5})

        assert result.success

    def test_check_pair(self):
        algorithm, engine = self.registry.check_pair("pagerank", "gas_async")

        assert algorithm.name == "pagerank"
        assert engine == "gas-async"
        with pytest.raises(ArgumentError):
            self.registry.check_pair("triangles", "pregel")


@pytest.mark.unit
class TestChecksums:
    """Test cases for result checksums."""

    def test_order_independent(self):
        assert checksum({0: 1, 1: 2}) == checksum({1: 2, 0: 1})

    def test_tiny_float_noise_ignored(self):
        assert checksum({0: 0.1 + 0.2}) == checksum({0: 0.3})

    def test_labels_change_checksum(self):
        assert ComponentLabeling([0, 0, 2]).checksum() != ComponentLabeling([0, 0, 0]).checksum()
