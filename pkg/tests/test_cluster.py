"""
Tests for the simulated cluster: routing, combiners, aggregators and metrics.
"""

import numpy as np
import pytest

from polygraph.cluster import (
    CONCAT_COMBINER, MAX_COMBINER, MIN_COMBINER, SUM_COMBINER, AggregatorSet, Cluster, MessageEnvelope, RunMetrics,
    and_aggregator, estimate_payload_size, exchange, max_aggregator, sum_aggregator,
)
from polygraph.errors import ConfigurationError, ResourceLimitError, RoutingError
from polygraph.graph import PartitionAssignment


def envelope(dst, payload, worker, seq):
    return MessageEnvelope(dst=dst, payload=payload, src_worker=worker, seq=seq)


@pytest.mark.unit
class TestExchange:
    """Test cases for message routing at the barrier."""

    def setup_method(self):
        # Vertices 0, 1 on worker 0; 2, 3 on worker 1.
        self.owner = (0, 0, 1, 1)

    def test_delivery_order_is_worker_then_sequence(self):
        outboxes = [
            [envelope(2, "a", 0, 0), envelope(2, "b", 0, 1)],
            [envelope(2, "c", 1, 0)],
        ]

        inboxes = exchange(outboxes, 4, self.owner)

        assert inboxes == {2: ["a", "b", "c"]}

    def test_local_and_remote_counts(self):
        metrics = RunMetrics()
        outboxes = [[envelope(1, 1, 0, 0), envelope(3, 1, 0, 1)], []]

        exchange(outboxes, 4, self.owner, metrics=metrics)

        assert metrics.messages_sent == 2
        assert metrics.messages_delivered == 2
        assert metrics.messages_local == 1
        assert metrics.messages_remote == 1
        assert metrics.payload_bytes == 16

    def test_combiner_collapses_per_sender_then_folds(self):
        metrics = RunMetrics()
        outboxes = [
            [envelope(3, 1.0, 0, 0), envelope(3, 2.0, 0, 1)],
            [envelope(3, 4.0, 1, 0)],
        ]

        inboxes = exchange(outboxes, 4, self.owner, combiner=SUM_COMBINER, metrics=metrics)

        assert inboxes == {3: [7.0]}
        assert metrics.messages_sent == 3
        assert metrics.messages_delivered == 2
        assert metrics.max_inbox_size == 1

    def test_min_combiner_with_one_message_is_identity(self):
        inboxes = exchange([[envelope(0, 5, 1, 0)], []], 4, self.owner, combiner=MIN_COMBINER)

        assert inboxes == {0: [5]}

    def test_nonexistent_destination(self):
        with pytest.raises(RoutingError) as excinfo:
            exchange([[envelope(7, 0, 0, 0)], []], 4, self.owner)

        assert excinfo.value.envelope.dst == 7
        assert excinfo.value.exit_code == 3

    def test_message_guard(self):
        with pytest.raises(ResourceLimitError):
            exchange([[envelope(0, 0, 0, i) for i in range(5)], []], 4, self.owner, max_messages=4)

    def test_empty_superstep(self):
        assert exchange([[], []], 4, self.owner) == {}


@pytest.mark.unit
class TestCombiners:
    """Test cases for the built-in combiners."""

    def setup_method(self):
        self.rng = np.random.default_rng(11)

    def test_fold(self):
        assert SUM_COMBINER.fold([1, 2, 3]) == 6
        assert MIN_COMBINER.fold([4, 2, 9]) == 2
        assert sorted(CONCAT_COMBINER.fold([(1,), (2, 3)])) == [1, 2, 3]

    @pytest.mark.parametrize("combiner", (SUM_COMBINER, MIN_COMBINER, MAX_COMBINER), ids=lambda c: c.name)
    def test_associative_and_commutative_on_integers(self, combiner):
        for _ in range(200):
            a, b, c = (int(x) for x in self.rng.integers(-10**6, 10**6, size=3))
            assert combiner.combine(a, b) == combiner.combine(b, a)
            assert combiner.combine(combiner.combine(a, b), c) == combiner.combine(a, combiner.combine(b, c))

    @pytest.mark.parametrize("combiner", (SUM_COMBINER, MIN_COMBINER, MAX_COMBINER), ids=lambda c: c.name)
    def test_fold_ignores_order(self, combiner):
        for size in range(1, 30):
            payloads = self.rng.random(size).tolist()
            shuffled = self.rng.permutation(payloads).tolist()
            assert combiner.fold(shuffled) == pytest.approx(combiner.fold(payloads), rel=1e-12)


@pytest.mark.unit
class TestAggregators:
    """Test cases for AggregatorSet."""

    def test_commit_reduces_worker_partials(self):
        aggregators = AggregatorSet([sum_aggregator("count"), max_aggregator("peak")])
        partials = [{}, {}]
        aggregators.accumulate(partials[0], "count", 2)
        aggregators.accumulate(partials[0], "count", 3)
        aggregators.accumulate(partials[1], "peak", 7.5)

        committed = aggregators.commit(partials)

        assert committed == {"count": 5, "peak": 7.5}
        assert aggregators.get("count") == 5

    def test_values_reset_each_superstep_unless_sticky(self):
        aggregators = AggregatorSet([sum_aggregator("plain"), sum_aggregator("total", sticky=True)])
        aggregators.commit([{"plain": 1, "total": 1}])

        aggregators.commit([{"plain": 2, "total": 2}])

        assert aggregators.get("plain") == 2
        assert aggregators.get("total") == 3

    def test_initial_value_visible_before_first_commit(self):
        aggregators = AggregatorSet([and_aggregator("done", initial=False)])

        assert aggregators.get("done") is False
        aggregators.commit([{}])
        assert aggregators.get("done") is True

    def test_unknown_name(self):
        aggregators = AggregatorSet([sum_aggregator("count")])

        with pytest.raises(ConfigurationError):
            aggregators.commit([{"other": 1}])
        with pytest.raises(ConfigurationError):
            aggregators.get("other")

    def test_duplicate_registration(self):
        with pytest.raises(ConfigurationError):
            AggregatorSet([sum_aggregator("x"), sum_aggregator("x")])


@pytest.mark.unit
class TestRunMetrics:
    """Test cases for RunMetrics."""

    def test_field_order_starts_with_supersteps(self):
        names = RunMetrics.field_names()

        assert names[0] == "supersteps"
        assert names[-1] == "wall_time"
        assert "active_vertices_per_superstep" in names

    def test_merge_of_two_phases(self):
        first = RunMetrics(supersteps=2, messages_sent=10, max_inbox_size=3,
                           active_vertices_per_superstep=[4, 2])
        second = RunMetrics(supersteps=1, messages_sent=5, max_inbox_size=1, converged=False,
                            active_vertices_per_superstep=[4])

        merged = first.merge(second)

        assert merged.supersteps == 3
        assert merged.messages_sent == 15
        assert merged.max_inbox_size == 3
        assert merged.converged is False
        assert merged.active_vertices_per_superstep == [4, 2, 4]

    def test_payload_size_estimate(self):
        assert estimate_payload_size(True) == 1
        assert estimate_payload_size(3) == 8
        assert estimate_payload_size((1, 2.0, (3,))) == 24


@pytest.mark.unit
class TestClusterBarrier:
    """Test cases for Cluster."""

    def setup_method(self):
        self.assignment = PartitionAssignment(k=2, owner=(0, 1, 0, 1))

    def test_workers_own_their_blocks(self):
        cluster = Cluster(self.assignment)

        assert [w.vertices for w in cluster.workers] == [(0, 2), (1, 3)]

    def test_barrier_delivers_and_commits(self):
        cluster = Cluster(self.assignment, aggregators=[sum_aggregator("seen")])
        cluster.begin_superstep()
        for worker in cluster.workers:
            worker.send(0, worker.id)
            worker.aggregate("seen", len(worker.vertices))
            worker.count("vertex_updates", 2)

        inboxes = cluster.barrier()

        assert inboxes == {0: [0, 1]}
        assert cluster.aggregators.get("seen") == 4
        assert cluster.metrics.vertex_updates == 4
        assert cluster.metrics.messages_remote == 1

    def test_parallel_results_in_worker_order(self):
        cluster = Cluster(PartitionAssignment(k=4, owner=(0, 1, 2, 3)), parallel=True)

        assert cluster.run_workers(lambda worker: worker.id * 10) == [0, 10, 20, 30]
