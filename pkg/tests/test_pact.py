"""
Tests for the PACT dataflow engine.
"""

import io

import pytest

from polygraph.engines.pact import DataflowPlan, Dataset, FieldType, execute_dag, key_partition
from polygraph.errors import ArgumentError, PlanValidationError

ID, LABEL, SCORE, COUNT = FieldType.ID, FieldType.LABEL, FieldType.SCORE, FieldType.COUNT


def countdown_plan(max_iterations, convergence="unchanged"):
    body = DataflowPlan()
    body.source("state", [ID, COUNT])
    body.map("step", "state", lambda row: [(row[0], max(row[1] - 1, 0))], [ID, COUNT])

    plan = DataflowPlan()
    plan.source("start", [ID, COUNT])
    plan.bulk_iteration("loop", "start", body, "state", "step", max_iterations, convergence)
    plan.sink("out", "loop")
    return plan


@pytest.mark.unit
class TestOperators:
    """Test cases for the individual operators."""

    def setup_method(self):
        self.edges = Dataset((ID, ID), [(0, 1), (0, 2), (1, 2), (2, 0), (3, 0)])
        self.scores = Dataset((ID, SCORE), [(0, 0.5), (1, 0.25), (2, 0.125), (3, 1.0)])

    def test_group_by_count(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.group_by("degree", "edges", [0], "count")

        outputs, _ = execute_dag(plan, {"edges": self.edges})

        assert outputs["degree"].sorted_rows() == [(0, 2), (1, 1), (2, 1), (3, 1)]
        assert outputs["degree"].schema == (ID, COUNT)

    def test_join_with_function(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.source("scores", [ID, SCORE])
        plan.join("contrib", "edges", "scores", [0], [0],
                  lambda edge, score: (edge[1], score[1]), schema=[ID, SCORE])
        plan.group_by("total", "contrib", [0], "sum", value_field=1)

        outputs, _ = execute_dag(plan, {"edges": self.edges, "scores": self.scores})

        assert outputs["total"].sorted_rows() == [(0, 1.125), (1, 0.5), (2, 0.75)]

    def test_join_without_function_concatenates(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.source("scores", [ID, SCORE])
        plan.join("both", "edges", "scores", [1], [0])

        outputs, _ = execute_dag(plan, {"edges": self.edges, "scores": self.scores})

        assert (3, 0, 0, 0.5) in outputs["both"].rows
        assert outputs["both"].arity == 4

    def test_map_can_fan_out_and_filter(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.map("both_ways", "edges", lambda e: [e, (e[1], e[0])] if e[0] < e[1] else [], [ID, ID])

        outputs, _ = execute_dag(plan, {"edges": self.edges})

        assert outputs["both_ways"].sorted_rows() == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]

    def test_reduce_sees_sorted_groups(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.reduce("neighbors", "edges", [0], lambda key, rows: [(key[0], len(rows), rows[0][1])],
                    [ID, COUNT, ID])

        outputs, _ = execute_dag(plan, {"edges": self.edges})

        assert outputs["neighbors"].sorted_rows() == [(0, 2, 1), (1, 1, 2), (2, 1, 0), (3, 1, 0)]

    def test_min_and_most_frequent(self):
        votes = Dataset((ID, LABEL), [(0, 5), (0, 3), (0, 5), (1, 4), (1, 2)])
        plan = DataflowPlan()
        plan.source("votes", [ID, LABEL])
        plan.group_by("smallest", "votes", [0], "min", value_field=1)
        plan.group_by("popular", "votes", [0], "most_frequent", value_field=1)

        outputs, _ = execute_dag(plan, {"votes": votes})

        assert outputs["smallest"].sorted_rows() == [(0, 3), (1, 2)]
        # Ties go to the smaller label.
        assert outputs["popular"].sorted_rows() == [(0, 5), (1, 2)]

    def test_shuffle_metrics(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.group_by("degree", "edges", [0], "count")

        _, single = execute_dag(plan, {"edges": self.edges}, parallelism=1)
        _, spread = execute_dag(plan, {"edges": self.edges}, parallelism=4)

        assert single.messages_sent == 5
        assert single.messages_remote == 0
        assert spread.messages_local + spread.messages_remote == 5

    def test_results_independent_of_parallelism(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.source("scores", [ID, SCORE])
        plan.join("contrib", "edges", "scores", [0], [0],
                  lambda edge, score: (edge[1], score[1] / 3.0), schema=[ID, SCORE])
        plan.group_by("total", "contrib", [0], "sum", value_field=1)

        baseline, _ = execute_dag(plan, {"edges": self.edges, "scores": self.scores}, parallelism=1)
        for parallelism in (2, 3, 8):
            outputs, _ = execute_dag(plan, {"edges": self.edges, "scores": self.scores}, parallelism=parallelism)
            assert outputs["total"].multiset() == baseline["total"].multiset()


@pytest.mark.unit
class TestPlanValidation:
    """Test cases for plan validation errors."""

    def test_cycle(self):
        plan = DataflowPlan()
        plan.map("a", "b", lambda r: [r], [ID])
        plan.map("b", "a", lambda r: [r], [ID])

        with pytest.raises(PlanValidationError):
            plan.validate()

    def test_unknown_input(self):
        plan = DataflowPlan()
        plan.map("a", "missing", lambda r: [r], [ID])

        with pytest.raises(PlanValidationError):
            plan.validate()

    def test_duplicate_operator(self):
        plan = DataflowPlan()
        plan.source("a", [ID])

        with pytest.raises(PlanValidationError):
            plan.source("a", [ID])

    def test_score_cannot_be_key(self):
        plan = DataflowPlan()
        plan.source("scores", [ID, SCORE])
        plan.group_by("bad", "scores", [1], "count")

        with pytest.raises(PlanValidationError):
            plan.validate()

    def test_join_key_types_must_match(self):
        plan = DataflowPlan()
        plan.source("left", [ID, COUNT])
        plan.source("right", [ID, ID])
        plan.join("bad", "left", "right", [1], [0])

        with pytest.raises(PlanValidationError):
            plan.validate()

    def test_ids_join_labels(self):
        plan = DataflowPlan()
        plan.source("labels", [ID, LABEL])
        plan.source("edges", [ID, ID])
        plan.join("ok", "labels", "edges", [1], [0])

        assert plan.validate()

    def test_join_function_needs_schema(self):
        plan = DataflowPlan()
        plan.source("a", [ID])
        plan.source("b", [ID])
        plan.join("j", "a", "b", [0], [0], lambda x, y: x)

        with pytest.raises(PlanValidationError):
            plan.validate()

    def test_source_arity_mismatch(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])

        with pytest.raises(PlanValidationError):
            execute_dag(plan, {"edges": Dataset((ID,), [(0,)])})

    def test_missing_source_dataset(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])

        with pytest.raises(PlanValidationError):
            execute_dag(plan, {})

    def test_map_output_arity_checked(self):
        plan = DataflowPlan()
        plan.source("edges", [ID, ID])
        plan.map("bad", "edges", lambda r: [(r[0],)], [ID, ID])

        with pytest.raises(PlanValidationError):
            execute_dag(plan, {"edges": Dataset((ID, ID), [(0, 1)])})

    def test_dataset_rows_match_schema(self):
        with pytest.raises(PlanValidationError):
            Dataset((ID, ID), [(0,)])

    def test_parallelism_must_be_positive(self):
        with pytest.raises(ArgumentError):
            execute_dag(countdown_plan(3), {"start": Dataset((ID, COUNT), [(0, 1)])}, parallelism=0)


@pytest.mark.unit
class TestBulkIteration:
    """Test cases for bulk iterations."""

    def setup_method(self):
        self.start = Dataset((ID, COUNT), [(0, 3), (1, 1)])

    def test_runs_until_unchanged(self):
        outputs, metrics = execute_dag(countdown_plan(10), {"start": self.start})

        assert outputs["out"].sorted_rows() == [(0, 0), (1, 0)]
        # Three decrements, then one pass that changes nothing.
        assert metrics.supersteps == 4
        assert metrics.converged

    def test_iteration_limit_without_convergence(self):
        outputs, metrics = execute_dag(countdown_plan(2), {"start": self.start})

        assert outputs["out"].sorted_rows() == [(0, 1), (1, 0)]
        assert metrics.max_supersteps_reached
        assert not metrics.converged

    def test_fixed_iteration_count(self):
        outputs, metrics = execute_dag(countdown_plan(2, convergence=None), {"start": self.start})

        assert outputs["out"].sorted_rows() == [(0, 1), (1, 0)]
        assert metrics.supersteps == 2
        assert metrics.converged

    def test_custom_convergence(self):
        def all_below_two(previous, current):
            return all(row[1] < 2 for row in current.rows)

        outputs, metrics = execute_dag(countdown_plan(10, convergence=all_below_two), {"start": self.start})

        assert outputs["out"].sorted_rows() == [(0, 1), (1, 0)]
        assert metrics.supersteps == 2

    def test_static_inputs_reach_the_body(self):
        body = DataflowPlan()
        body.source("state", [ID, LABEL])
        body.source("edges", [ID, ID])
        body.join("spread", "state", "edges", [0], [0], lambda s, e: (e[1], s[1]), schema=[ID, LABEL])
        body.group_by("next", "spread", [0], "min", value_field=1)

        plan = DataflowPlan()
        plan.source("labels", [ID, LABEL])
        plan.source("edges", [ID, ID])
        plan.bulk_iteration("loop", "labels", body, "state", "next", 20, static_inputs={"edges": "edges"})
        plan.sink("out", "loop")

        # Self rows keep every vertex present in the join.
        edges = Dataset((ID, ID), [(0, 1), (1, 0), (1, 2), (2, 1), (0, 0), (1, 1), (2, 2)])
        labels = Dataset((ID, LABEL), [(0, 0), (1, 1), (2, 2)])
        outputs, _ = execute_dag(plan, {"labels": labels, "edges": edges})

        assert outputs["out"].sorted_rows() == [(0, 0), (1, 0), (2, 0)]

    def test_body_must_define_output(self):
        body = DataflowPlan()
        body.source("state", [ID, COUNT])
        plan = DataflowPlan()
        plan.source("start", [ID, COUNT])
        plan.bulk_iteration("loop", "start", body, "state", "missing", 3)

        with pytest.raises(PlanValidationError):
            plan.validate()


@pytest.mark.unit
class TestDatasetCsv:
    """Test cases for Dataset CSV export and import."""

    def test_csv_round_trip(self):
        dataset = Dataset((ID, SCORE), [(0, 0.5), (3, 1.25)])

        text = dataset.to_csv()
        restored = Dataset.from_csv(io.StringIO(text), [ID, SCORE])

        assert text.splitlines() == ["0,0.5", "3,1.25"]
        assert restored == dataset

    def test_column_count_checked(self):
        with pytest.raises(PlanValidationError):
            Dataset.from_csv(io.StringIO("1,2,3\n"), [ID, ID])

    def test_key_partition_is_stable(self):
        assert key_partition((5,), 8) == key_partition((5,), 8)
        assert 0 <= key_partition((5, 6), 3) < 3
