"""Command-line entry point: ``awae generate | run | report``.

Exit codes: 0 success, 1 runtime failure (some run failed), 2 usage or
configuration error, 3 empty input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from awae.errors import AwaeError, ConfigurationError, StreamError
from awae.evaluation import read_results
from awae.experiment import OUTPUT_ROOT_ENV, generate_stream_file, load_config, run_experiment
from awae.report import write_report

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2, 3
log = logging.getLogger("awae")


def _fail(message: str, code: int) -> int:
    print(f"awae: error: {message}", file=sys.stderr)
    return code


def cmd_generate(args) -> int:
    try:
        config = load_config(args.config)
        n_rows = generate_stream_file(config, Path(args.out), args.seed_override)
    except ConfigurationError as exc:
        return _fail(str(exc), EXIT_USAGE)
    except StreamError as exc:
        return _fail(str(exc), EXIT_USAGE)
    log.info("wrote %d rows to %s", n_rows, args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = load_config(args.config, Path(args.out) if args.out else None)
    except ConfigurationError as exc:
        return _fail(str(exc), EXIT_USAGE)
    if args.seed_override is not None:
        config = replace(config, seeds=[args.seed_override])
    try:
        outcome = run_experiment(config, force=args.force, workers=args.workers)
    except FileExistsError as exc:
        return _fail(str(exc), EXIT_USAGE)
    except (StreamError, ConfigurationError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except AwaeError as exc:
        return _fail(str(exc), EXIT_FAILURE)
    log.info("%d runs written to %s", outcome.n_runs, outcome.results_path)
    if outcome.failures:
        for run_id, chunk, error in outcome.failures:
            print(f"awae: run {run_id} failed at chunk {chunk}: {error}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_report(args) -> int:
    path = Path(args.results)
    if not path.exists():
        return _fail(f"{path} does not exist", EXIT_USAGE)
    try:
        rows = read_results(path)
    except (StreamError, ValueError) as exc:
        return _fail(f"{path}: {exc}", EXIT_USAGE)
    if not rows:
        return _fail(f"{path} contains no results", EXIT_EMPTY)
    out = Path(args.out) if args.out else path.parent / "report"
    report = write_report(rows, out, args.pairing)
    sys.stdout.write(report.render())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="awae",
        description="Active Weighted Aging Ensemble experiments on drifting data streams.",
        epilog=f"Default output root is ${OUTPUT_ROOT_ENV} (or ./results) when the config sets no output.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write the configured stream as CSV")
    gen.add_argument("--config", required=True, help="YAML experiment/stream config")
    gen.add_argument("--out", required=True, help="CSV file to write")
    gen.add_argument("--seed-override", type=int, help="stream seed to use instead of stream.seed")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser(
        "run",
        help="run the method x learner x drift x seed grid",
        description="CSV streams are cut into fixed chunks; a trailing partial chunk is dropped.",
    )
    run.add_argument("--config", required=True, help="YAML experiment config")
    run.add_argument("--out", help="output directory (overrides config 'output')")
    run.add_argument("--force", action="store_true", help="discard existing results and snapshots")
    run.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    run.add_argument("--seed-override", type=int, help="run a single seed instead of the configured list")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="summarize a results CSV")
    rep.add_argument("results", help="results.csv written by 'run'")
    rep.add_argument("--out", help="report directory (default: <results dir>/report)")
    rep.add_argument("--pairing", choices=("seed", "chunk"), default="seed", help="t-test pairing unit")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
