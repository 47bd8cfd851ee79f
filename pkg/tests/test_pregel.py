"""
Tests for the Pregel engine and the shared superstep driver.
"""

from dataclasses import replace

import pytest

from polygraph.cluster import MAX_COMBINER, sum_aggregator
from polygraph.cluster.checkpoint import checkpoint_path
from polygraph.engines.bsp import BspOptions
from polygraph.engines.pregel import PregelEngine, VertexProgram, run_pregel
from polygraph.errors import RestoreError, RoutingError
from polygraph.graph import partition_hash, partition_range, path_graph, star_graph


class MaxValue(VertexProgram):
    """Every vertex ends with the largest id in its component."""

    def __init__(self, use_combiner=False):
        self.combiner = MAX_COMBINER if use_combiner else None

    def initial_state(self, vertex, graph):
        return vertex

    def compute(self, vertex, messages, ctx):
        if ctx.superstep() == 0:
            ctx.send_to_all_neighbors(vertex.value)
        elif messages and max(messages) > vertex.value:
            vertex.value = max(messages)
            ctx.send_to_all_neighbors(vertex.value)
        ctx.vote_to_halt()


class CountVisible(VertexProgram):
    """Records the committed aggregator value seen in each superstep."""

    def aggregators(self):
        return [sum_aggregator("count")]

    def initial_state(self, vertex, graph):
        return ()

    def compute(self, vertex, messages, ctx):
        vertex.value = vertex.value + (ctx.get_aggregated("count"),)
        ctx.aggregate("count", 1)
        if ctx.superstep() >= 2:
            ctx.vote_to_halt()


class WakeUp(VertexProgram):
    """Counts compute calls; vertex 0 wakes vertex 1 once."""

    def initial_state(self, vertex, graph):
        return 0

    def compute(self, vertex, messages, ctx):
        vertex.value += 1
        if ctx.superstep() == 0 and vertex.id == 0:
            ctx.send(1, "wake")
        ctx.vote_to_halt()


class NeverHalts(VertexProgram):
    def initial_state(self, vertex, graph):
        return 0

    def compute(self, vertex, messages, ctx):
        vertex.value += 1


class MasterStops(NeverHalts):
    def master_compute(self, master):
        master.store["last"] = master.superstep
        if master.superstep == 1:
            master.halt_computation()


class Misrouted(NeverHalts):
    def compute(self, vertex, messages, ctx):
        ctx.send(99, 0)


@pytest.mark.unit
class TestPregelSemantics:
    """Test cases for superstep, messaging and halting semantics."""

    def setup_method(self):
        self.graph = path_graph(12)
        self.assignment = partition_hash(self.graph, 3)

    def test_max_value_propagates(self):
        states, metrics = run_pregel(self.graph, self.assignment, MaxValue())

        assert states == [11] * 12
        assert metrics.converged
        assert not metrics.max_supersteps_reached
        # One hop per superstep, plus the final round in which vertex 1 hears from vertex 0.
        assert metrics.supersteps == 13

    def test_aggregates_visible_next_superstep(self):
        states, metrics = run_pregel(path_graph(4), partition_hash(path_graph(4), 2), CountVisible())

        assert states == [(0, 4, 4)] * 4
        assert metrics.supersteps == 3

    def test_message_wakes_halted_vertex(self):
        graph = path_graph(3)
        states, metrics = run_pregel(graph, partition_hash(graph, 2), WakeUp())

        assert states == [1, 2, 1]
        assert metrics.active_vertices_per_superstep == [3, 1]
        assert metrics.messages_sent == 1

    def test_superstep_guard(self):
        states, metrics = run_pregel(self.graph, self.assignment, NeverHalts(), max_supersteps=5)

        assert states == [5] * 12
        assert metrics.supersteps == 5
        assert metrics.max_supersteps_reached
        assert not metrics.converged

    def test_master_halts(self):
        engine = PregelEngine(self.graph, self.assignment, MasterStops())
        metrics = engine.run()

        assert metrics.supersteps == 2
        assert metrics.converged
        assert engine.master_store["last"] == 1

    def test_empty_graph_runs_zero_supersteps(self):
        graph = path_graph(0)
        states, metrics = run_pregel(graph, partition_range(graph, 2), MaxValue())

        assert states == []
        assert metrics.supersteps == 0

    def test_routing_error_surfaces(self):
        with pytest.raises(RoutingError):
            run_pregel(self.graph, self.assignment, Misrouted())

    def test_combiner_reduces_deliveries_not_result(self):
        graph = star_graph(20)
        assignment = partition_hash(graph, 4)

        plain_states, plain = run_pregel(graph, assignment, MaxValue())
        combined_states, combined = run_pregel(graph, assignment, MaxValue(use_combiner=True))

        assert plain_states == combined_states
        assert combined.messages_delivered < plain.messages_delivered
        assert combined.messages_sent == plain.messages_sent

    def test_parallel_matches_serial(self):
        serial_states, serial = run_pregel(self.graph, self.assignment, MaxValue())
        parallel_states, parallel = run_pregel(self.graph, self.assignment, MaxValue(),
                                               options=BspOptions(parallel=True))

        assert parallel_states == serial_states
        assert replace(parallel, wall_time=0.0) == replace(serial, wall_time=0.0)

    def test_worker_count_does_not_change_states(self):
        results = {k: run_pregel(self.graph, partition_hash(self.graph, k), MaxValue())[0] for k in (1, 2, 4, 8)}

        assert len({tuple(states) for states in results.values()}) == 1


@pytest.mark.integration
class TestPregelRecovery:
    """Test cases for checkpoints, injected failures and resume."""

    def setup_method(self):
        self.graph = path_graph(12)
        self.assignment = partition_hash(self.graph, 4)

    def test_failure_recovers_from_checkpoint(self, tmp_path):
        expected, clean = run_pregel(self.graph, self.assignment, MaxValue())

        options = BspOptions(checkpoint_every=2, checkpoint_dir=tmp_path, kill_at_superstep=5, kill_worker=1)
        states, metrics = run_pregel(self.graph, self.assignment, MaxValue(), options=options)

        assert states == expected
        assert metrics.recoveries == 1
        assert metrics.checkpoints_written >= 2
        assert metrics.messages_sent == clean.messages_sent
        assert metrics.supersteps == clean.supersteps

    def test_checkpoint_after_every_superstep(self, tmp_path):
        _, metrics = run_pregel(self.graph, self.assignment, CountVisible(),
                                options=BspOptions(checkpoint_every=1, checkpoint_dir=tmp_path))

        assert metrics.supersteps == 3
        assert metrics.checkpoints_written == 3
        assert sorted(p.name for p in tmp_path.glob("*.ckpt")) == [
            checkpoint_path(tmp_path, "pregel-CountVisible", superstep).name for superstep in (1, 2, 3)
        ]

    def test_failure_without_checkpoint_restarts(self, tmp_path):
        expected, _ = run_pregel(self.graph, self.assignment, MaxValue())

        options = BspOptions(checkpoint_dir=tmp_path, kill_at_superstep=3)
        states, metrics = run_pregel(self.graph, self.assignment, MaxValue(), options=options)

        assert states == expected
        assert metrics.recoveries == 1

    def test_resume_from_checkpoint_file(self, tmp_path):
        expected, _ = run_pregel(self.graph, self.assignment, MaxValue())
        run_pregel(self.graph, self.assignment, MaxValue(),
                   options=BspOptions(checkpoint_every=2, checkpoint_dir=tmp_path, max_supersteps=4))
        path = checkpoint_path(tmp_path, "pregel-MaxValue", 4)

        states, metrics = run_pregel(self.graph, self.assignment, MaxValue(),
                                     options=BspOptions(resume_from=path))

        assert path.exists()
        assert states == expected
        assert metrics.converged

    def test_resume_with_wrong_program_rejected(self, tmp_path):
        run_pregel(self.graph, self.assignment, MaxValue(),
                   options=BspOptions(checkpoint_every=2, checkpoint_dir=tmp_path, max_supersteps=2))

        with pytest.raises(RestoreError):
            run_pregel(self.graph, self.assignment, WakeUp(),
                       options=BspOptions(resume_from=checkpoint_path(tmp_path, "pregel-MaxValue", 2)))
