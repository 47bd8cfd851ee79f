"""
Command-line entry point for polygraph.

    polygraph run --input graph.el --algorithm cc --engine pregel --workers 1,2,4
    polygraph oracle --input graph.el --algorithm cc

Records go to stdout, logs to stderr. Workers are logical partitions
simulated in one process, not machines.
"""

from typing import List, Optional, Sequence
import argparse
import logging
import sys

from . import __version__
from .algorithms import AlgorithmRegistry
from .bench import (
    GENERATORS, ORACLE_ALGORITHMS, OUTPUT_FORMATS, BenchmarkSpec, emit_metrics, emit_oracle, load_graph,
    oracle_record, run_benchmark,
)
from .algorithms.clustering import TARGETS
from .algorithms.pagerank import DEFAULT_ALPHA, DEFAULT_ITERATIONS, DEFAULT_TOLERANCE, MODES
from .config import LOG_LEVELS, get_settings
from .dashboard import Dashboard
from .engines import ENGINES, PARTITIONERS
from .errors import ArgumentError, PolygraphError

logger = logging.getLogger("polygraph")


def _worker_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _add_graph_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="edge list file ('u v' per line, '#' comments)")
    source.add_argument("--generate", choices=GENERATORS, help="generate a seeded graph instead")
    parser.add_argument("--directed", action="store_true", help="treat the input as directed")
    size = parser.add_mutually_exclusive_group()
    size.add_argument("--vertices", type=int, help="generated graph size")
    size.add_argument("--edges-per-worker", type=int,
                      help="weak scaling: grow the generated graph with the worker count")
    parser.add_argument("--probability", type=float, default=0.01, help="edge probability for --generate gnp")
    parser.add_argument("--seed", type=int, default=0, help="seed for generators, partitioning and sampling")
    parser.add_argument("--output", choices=OUTPUT_FORMATS, default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polygraph",
                                     description="Graph analysis across Pregel, GAS, graph-centric "
                                                 "and dataflow engines on simulated workers")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", choices=LOG_LEVELS, type=str.upper, default=None,
                        help="stderr log level (default: POLYGRAPH_LOG_LEVEL or WARNING)")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run an algorithm x engine x workers matrix")
    _add_graph_arguments(run)
    run.add_argument("--algorithm", required=True, choices=AlgorithmRegistry().list_algorithms())
    run.add_argument("--engine", required=True, help=f"one of {', '.join(ENGINES)}")
    run.add_argument("--workers", type=_worker_list, default=[1], help="comma-separated worker counts")
    run.add_argument("--partitioner", choices=PARTITIONERS, default="hash")
    run.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="PageRank teleport weight")
    run.add_argument("--mode", choices=MODES, default=None,
                     help="PageRank mode (default: tolerance when --tolerance is given, else fixed)")
    run.add_argument("--tolerance", type=float, default=None, help="PageRank convergence threshold")
    run.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    run.add_argument("--samples", type=int, default=10000, help="clustering-approx sample count")
    run.add_argument("--target", choices=TARGETS, default="average_local")
    run.add_argument("--max-rounds", type=int, default=None, help="community detection round limit")
    run.add_argument("--repetitions", type=int, default=1)
    run.add_argument("--checkpoint-every", type=int, default=None)
    run.add_argument("--checkpoint-dir", default=None)
    run.add_argument("--kill-at-superstep", type=int, default=None, help="inject one worker failure")
    run.add_argument("--parallel", action="store_true", help="run workers on a thread pool")
    run.add_argument("--omit-timing", action="store_true", help="report wall_time as 0")
    run.add_argument("--summary", action="store_true", help="print a per-cell summary table to stderr")

    oracle = commands.add_parser("oracle", help="brute-force checksum of a small graph")
    _add_graph_arguments(oracle)
    oracle.add_argument("--algorithm", required=True, choices=ORACLE_ALGORITHMS)
    oracle.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    oracle.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    return parser


def _spec_values(args: argparse.Namespace) -> dict:
    values = {
        "input": args.input,
        "directed": args.directed,
        "generate": args.generate,
        "vertices": args.vertices,
        "edges_per_worker": args.edges_per_worker,
        "probability": args.probability,
        "seed": args.seed,
        "output": args.output,
    }
    if args.command == "run":
        values.update(
            algorithm=args.algorithm,
            engine=args.engine,
            workers=args.workers,
            partitioner=args.partitioner,
            alpha=args.alpha,
            mode=args.mode or ("tolerance" if args.tolerance is not None else "fixed"),
            tolerance=args.tolerance if args.tolerance is not None else DEFAULT_TOLERANCE,
            iterations=args.iterations,
            samples=args.samples,
            target=args.target,
            repetitions=args.repetitions,
            checkpoint_every=args.checkpoint_every,
            checkpoint_dir=args.checkpoint_dir,
            kill_at_superstep=args.kill_at_superstep,
            parallel=args.parallel,
            omit_timing=args.omit_timing,
        )
        if args.max_rounds is not None:
            values["max_rounds"] = args.max_rounds
    else:
        values.update(algorithm="cc", engine="pregel")
    return values


def _run(args: argparse.Namespace) -> str:
    spec = BenchmarkSpec.build(**_spec_values(args))
    records = run_benchmark(spec)
    if args.summary:
        dashboard = Dashboard()
        dashboard.add_records(records)
        sys.stderr.write(dashboard.render_text() + "\n")
    return emit_metrics(records, spec.output)


def _oracle(args: argparse.Namespace) -> str:
    spec = BenchmarkSpec.build(**_spec_values(args))
    if spec.edges_per_worker is not None:
        raise ArgumentError("--edges-per-worker only applies to run")
    graph = load_graph(spec, 1)
    return emit_oracle(oracle_record(graph, args.algorithm, args.alpha, args.iterations), spec.output)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    try:
        level = args.log_level or get_settings().log_level
        logging.basicConfig(level=level, stream=sys.stderr,
                            format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        output = _run(args) if args.command == "run" else _oracle(args)
    except PolygraphError as e:
        logger.debug("command failed", exc_info=True)
        sys.stderr.write(f"polygraph: error: {e}\n")
        return e.exit_code
    except OSError as e:
        sys.stderr.write(f"polygraph: error: {e}\n")
        return 1
    sys.stdout.write(output)
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
