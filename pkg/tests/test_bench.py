"""
Tests for the benchmark runner and the command-line front end.
"""

import io
import json

import pandas as pd
import pytest

from polygraph.bench import (
    RECORD_FIELDS, BenchmarkSpec, emit_metrics, emit_oracle, load_graph, oracle_record, run_benchmark,
    weak_scaling_vertices,
)
from polygraph.errors import ArgumentError
from polygraph.graph import load_edge_list_file
from polygraph.main import main

TRIANGLES = "# two triangles and a bridge\n10 11\n11 12\n10 12\n13 14\n14 15\n13 15\n12 13\n"


@pytest.fixture
def edge_file(tmp_path):
    path = tmp_path / "graph.el"
    path.write_text(TRIANGLES)
    return path


@pytest.mark.unit
class TestBenchmarkSpec:
    """Test cases for BenchmarkSpec validation."""

    def test_valid_spec(self, edge_file):
        spec = BenchmarkSpec.build(input=edge_file, algorithm="cc", engine="GraphCentric", workers=[1, 2])

        assert spec.engine == "graph-centric"
        assert spec.engine_config(2).workers == 2

    def test_needs_exactly_one_source(self, edge_file):
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(algorithm="cc", engine="pregel")
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(input=edge_file, generate="gnp", vertices=10, algorithm="cc", engine="pregel")

    def test_unsupported_pair_lists_valid_pairs(self, edge_file):
        with pytest.raises(ArgumentError, match="valid pairs"):
            BenchmarkSpec.build(input=edge_file, algorithm="clustering-approx", engine="pact")

    def test_unknown_engine(self, edge_file):
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(input=edge_file, algorithm="cc", engine="spark")

    def test_worker_counts_positive(self, edge_file):
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(input=edge_file, algorithm="cc", engine="pregel", workers=[2, 0])

    def test_checkpointing_needs_recoverable_engine(self, edge_file):
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(input=edge_file, algorithm="cc", engine="gas-sync", checkpoint_every=2)

    def test_async_pagerank_needs_tolerance(self, edge_file):
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(input=edge_file, algorithm="pagerank", engine="gas-async")

        spec = BenchmarkSpec.build(input=edge_file, algorithm="pagerank", engine="gas-async", mode="tolerance")
        assert spec.mode == "tolerance"

    def test_generator_size(self):
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(generate="dm", algorithm="cc", engine="pregel")
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(generate="gnp", algorithm="cc", engine="pregel")
        with pytest.raises(ArgumentError):
            BenchmarkSpec.build(generate="dm", vertices=2, algorithm="cc", engine="pregel")


@pytest.mark.unit
class TestGraphSelection:
    """Test cases for graph loading and weak scaling."""

    def test_weak_scaling_vertices(self):
        assert weak_scaling_vertices(10, 4) == 21
        assert weak_scaling_vertices(1, 1) == 3

    def test_weak_scaling_grows_graph(self):
        spec = BenchmarkSpec.build(generate="dm", edges_per_worker=20, algorithm="cc", engine="pregel")

        small, large = load_graph(spec, 1), load_graph(spec, 4)

        assert small.n == 11
        assert large.n == 41
        assert large.m == 2 * large.n - 3

    def test_input_file(self, edge_file):
        spec = BenchmarkSpec.build(input=edge_file, algorithm="cc", engine="pregel")

        graph = load_graph(spec, 8)

        assert (graph.n, graph.m) == (6, 7)


@pytest.mark.integration
class TestRunBenchmark:
    """Test cases for run_benchmark records."""

    def test_one_record_per_cell(self, edge_file):
        spec = BenchmarkSpec.build(input=edge_file, algorithm="cc", engine="pregel", workers=[1, 2, 4],
                                   repetitions=2)

        records = run_benchmark(spec)

        assert len(records) == 6
        assert all(tuple(record) == RECORD_FIELDS for record in records)
        assert [(r["workers"], r["repetition"]) for r in records] == [(1, 0), (1, 1), (2, 0), (2, 1), (4, 0), (4, 1)]
        assert len({record["checksum"] for record in records}) == 1

    def test_checksum_matches_oracle(self, edge_file):
        graph = load_edge_list_file(edge_file)
        for algorithm, engine in (("cc", "gas-sync"), ("pagerank", "pact"), ("clustering-exact", "graph-centric")):
            spec = BenchmarkSpec.build(input=edge_file, algorithm=algorithm, engine=engine, workers=[3])
            (record,) = run_benchmark(spec)
            assert record["checksum"] == oracle_record(graph, algorithm)["checksum"], algorithm

    def test_omit_timing_makes_output_reproducible(self, edge_file):
        spec = BenchmarkSpec.build(input=edge_file, algorithm="pagerank", engine="pregel", workers=[1, 2],
                                   omit_timing=True)

        first = emit_metrics(run_benchmark(spec))
        second = emit_metrics(run_benchmark(spec))

        assert first == second

    def test_failing_cell_raises(self, tmp_path):
        path = tmp_path / "directed.el"
        path.write_text("0 1\n1 2\n")
        spec = BenchmarkSpec.build(input=path, directed=True, algorithm="cc", engine="pregel")

        with pytest.raises(ArgumentError):
            run_benchmark(spec)

    def test_recovery_is_recorded(self, edge_file, tmp_path):
        spec = BenchmarkSpec.build(input=edge_file, algorithm="cc", engine="pregel", workers=[2],
                                   checkpoint_every=1, checkpoint_dir=tmp_path, kill_at_superstep=2)

        (record,) = run_benchmark(spec)

        assert record["recoveries"] == 1
        assert record["checksum"] == oracle_record(load_edge_list_file(edge_file), "cc")["checksum"]


@pytest.mark.unit
class TestEmit:
    """Test cases for record serialization."""

    def setup_method(self):
        self.record = {name: 0 for name in RECORD_FIELDS}
        self.record.update(algorithm="cc", engine="pregel", active_vertices_per_superstep=[6, 2],
                           converged=True, checksum="00ff")

    def test_csv_has_header_and_one_line_per_record(self):
        text = emit_metrics([self.record])
        lines = text.splitlines()

        assert len(lines) == 2
        assert lines[0] == ",".join(RECORD_FIELDS)
        assert "6;2" in lines[1]
        assert text.endswith("\n")

    def test_json_keeps_field_order(self):
        rows = json.loads(emit_metrics([self.record, self.record], "json"))

        assert len(rows) == 2
        assert list(rows[0]) == list(RECORD_FIELDS)
        assert rows[0]["active_vertices_per_superstep"] == [6, 2]

    def test_empty_records_rejected(self):
        with pytest.raises(ArgumentError):
            emit_metrics([])

    def test_unknown_format(self):
        with pytest.raises(ArgumentError):
            emit_metrics([self.record], "xml")

    def test_oracle_record(self):
        text = emit_oracle({"algorithm": "cc", "vertices": 3, "edges": 2, "checksum": "abc"})

        assert text == "algorithm,vertices,edges,checksum\ncc,3,2,abc\n"

    def test_oracle_rejects_unknown_algorithm(self, edge_file):
        with pytest.raises(ArgumentError):
            oracle_record(load_edge_list_file(edge_file), "community")


@pytest.mark.integration
class TestCommandLine:
    """Test cases for the polygraph command."""

    def test_run_writes_csv(self, edge_file, capsys):
        code = main(["run", "--input", str(edge_file), "--algorithm", "cc", "--engine", "pregel",
                     "--workers", "1,2", "--omit-timing"])

        out = capsys.readouterr().out
        frame = pd.read_csv(io.StringIO(out))
        assert code == 0
        assert list(frame.columns) == list(RECORD_FIELDS)
        assert list(frame["workers"]) == [1, 2]
        assert set(frame["wall_time"]) == {0.0}

    def test_run_matches_oracle_command(self, edge_file, capsys):
        main(["run", "--input", str(edge_file), "--algorithm", "pagerank", "--engine", "graph-centric",
              "--workers", "2", "--iterations", "12", "--output", "json"])
        run_record = json.loads(capsys.readouterr().out)[0]

        main(["oracle", "--input", str(edge_file), "--algorithm", "pagerank", "--iterations", "12"])
        oracle_frame = pd.read_csv(io.StringIO(capsys.readouterr().out), dtype=str)

        assert oracle_frame["checksum"][0] == run_record["checksum"]

    def test_tolerance_flag_selects_tolerance_mode(self, edge_file, capsys):
        code = main(["run", "--input", str(edge_file), "--algorithm", "pagerank", "--engine", "gas-async",
                     "--tolerance", "1e-9"])

        assert code == 0

    def test_summary_goes_to_stderr(self, edge_file, capsys):
        main(["run", "--input", str(edge_file), "--algorithm", "cc", "--engine", "pact", "--workers", "1,4",
              "--summary"])

        captured = capsys.readouterr()
        assert "remote_share" in captured.err
        assert "remote_share" not in captured.out

    def test_parse_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.el"
        path.write_text("0 1\n1 two\n")

        code = main(["run", "--input", str(path), "--algorithm", "cc", "--engine", "pregel"])

        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_invalid_utf8_exit_code(self, tmp_path, capsys):
        path = tmp_path / "binary.el"
        path.write_bytes(b"0 1\n\xff\xfe 2\n")

        code = main(["oracle", "--input", str(path), "--algorithm", "cc"])

        assert code == 2
        assert "invalid UTF-8" in capsys.readouterr().err

    def test_unsupported_pair_exit_code(self, edge_file, capsys):
        code = main(["run", "--input", str(edge_file), "--algorithm", "clustering-approx", "--engine", "pact"])

        assert code == 1
        assert "valid pairs" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path, capsys):
        code = main(["run", "--input", str(tmp_path / "absent.el"), "--algorithm", "cc", "--engine", "pregel"])

        assert code == 1

    def test_generated_graph(self, capsys):
        code = main(["run", "--generate", "dm", "--edges-per-worker", "30", "--algorithm", "clustering-exact",
                     "--engine", "pregel", "--workers", "1,2"])

        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert code == 0
        assert list(frame["vertices"]) == [16, 31]

    def test_bad_arguments_exit_through_argparse(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["run", "--algorithm", "cc", "--engine", "pregel"])

        assert excinfo.value.code == 2
