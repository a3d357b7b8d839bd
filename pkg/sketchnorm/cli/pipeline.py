"""Command-line front end: estimate a matrix file or run the Monte Carlo harness.

Standard output carries the report only (JSON by default). Logs go to stderr.
The failure class is reported through the exit code:

    0  success
    1  harness ran but at least one experiment missed its bound
    2  input could not be read or parsed
    3  invalid parameter
    4  numerical failure

Usage:
    sketchnorm estimate matrix.mtx --eps 0.1 --delta 0.05 --seed 7
    sketchnorm estimate table.csv --method exact --output plain
    sketchnorm harness --experiment overlap --seed 1
    sketchnorm harness --experiment theorem1 --trials 100
"""
import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from sketchnorm.data.matrix_io import FORMATS, read_matrix
from sketchnorm.errors import MatrixParseError, NumericalError, ParameterError, require_open_unit
from sketchnorm.estimate.estimator import EstimateRequest, Method, estimate
from sketchnorm.harness.experiments import (
    EXPERIMENT_ALIASES,
    EXPERIMENTS,
    HarnessConfig,
    run_harness,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_HARNESS_FAILED = 1
EXIT_PARSE = 2
EXIT_PARAMETER = 3
EXIT_NUMERICAL = 4

OUTPUTS = ("json", "plain")


def entropy_seed() -> int:
    """Fresh 64-bit seed from OS entropy; echoed in the report so runs can be repeated."""
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


@dataclass
class CliConfig:
    input_path: str
    format: str | None = None  # None infers from the extension
    eps: float = 0.1
    delta: float = 0.05
    method: str = "auto"
    seed: int | None = None  # None draws from entropy
    output: str = "json"

    def __post_init__(self):
        require_open_unit("eps", self.eps)
        require_open_unit("delta", self.delta)
        if self.format is not None and self.format not in FORMATS:
            raise ParameterError(f"unknown format {self.format!r}; expected one of {FORMATS}")
        if self.output not in OUTPUTS:
            raise ParameterError(f"unknown output {self.output!r}; expected one of {OUTPUTS}")
        if self.seed is None:
            self.seed = entropy_seed()


def build_report(result, wall_time_ms: float) -> dict:
    """Flat report with the fixed field set."""
    full = result.to_dict()
    report = {
        "estimate_sq": full["estimate_sq"],
        "estimate": full["estimate"],
        "effective_rank": full["effective_rank"],
        "method_used": full["method_used"],
        "r_used": full["r_used"],
        "iterations_used": full["iterations_used"],
        "eps": full["epsilon"],
        "delta": full["delta"],
        "seed": full["seed"],
        "wall_time_ms": wall_time_ms,
    }
    if result.degenerate:
        report["degenerate"] = True
    return report


def format_plain(report: dict) -> str:
    return "\n".join(f"{key} {value}" for key, value in report.items())


def _emit(report: dict, output: str):
    if output == "json":
        print(json.dumps(report, sort_keys=True))
    else:
        print(format_plain(report))


def _exit_code_for(error: Exception) -> int:
    if isinstance(error, (MatrixParseError, OSError)):
        return EXIT_PARSE
    if isinstance(error, ParameterError):
        return EXIT_PARAMETER
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    raise error


def run(config: CliConfig) -> int:
    """Read the matrix, estimate its norm, print the report. Returns the exit code."""
    try:
        start = time.perf_counter()
        m = read_matrix(config.input_path, config.format)
        request = EstimateRequest(
            epsilon=config.eps, delta=config.delta, method=config.method, seed=config.seed,
        )
        result = estimate(m, request)
        wall_time_ms = (time.perf_counter() - start) * 1000.0
        logger.info("Estimated %s in %.1f ms", config.input_path, wall_time_ms)
    except Exception as e:
        code = _exit_code_for(e)
        print(f"error: {e}", file=sys.stderr)
        return code

    _emit(build_report(result, wall_time_ms), config.output)
    return EXIT_OK


def harness_table(report: dict) -> str:
    """One row per experiment with its bound, threshold and empirical rate."""
    df = pd.DataFrame(report["experiments"])
    columns = ["name", "trials", "successes", "empirical_rate", "bound", "threshold", "passed"]
    return df[columns].to_string(index=False)


def run_harness_command(config: HarnessConfig, output: str = "json") -> int:
    try:
        report = run_harness(config)
    except Exception as e:
        code = _exit_code_for(e)
        print(f"error: {e}", file=sys.stderr)
        return code

    if output == "json":
        print(json.dumps(report, sort_keys=True))
    else:
        print(harness_table(report))
        print(f"passed {report['passed']}")
    return EXIT_OK if report["passed"] else EXIT_HARNESS_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchnorm",
        description="Randomized spectral norm estimation with a sketch-then-power-iterate pipeline",
    )
    parser.add_argument(
        "--log-level", default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Log level for messages on stderr",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="Estimate ||A|| for a matrix file")
    est.add_argument("input_path", help="Matrix Market (.mtx/.mm) or dense CSV (.csv) file")
    est.add_argument("--eps", type=float, default=0.1, help="Relative error on ||A||^2")
    est.add_argument("--delta", type=float, default=0.05, help="Failure probability")
    est.add_argument("--seed", type=int, default=None, help="64-bit seed (default: from entropy)")
    est.add_argument("--method", default="auto", choices=[m.value for m in Method])
    est.add_argument("--format", default=None, choices=list(FORMATS))
    est.add_argument("--output", default="json", choices=list(OUTPUTS))

    harness = sub.add_parser("harness", help="Monte Carlo check of the probabilistic bounds")
    harness.add_argument(
        "--experiment", default="all", choices=["all", *EXPERIMENTS, *EXPERIMENT_ALIASES],
    )
    harness.add_argument(
        "--trials", type=int, default=None,
        help="Trials for sketch/power/end_to_end (default per experiment)",
    )
    harness.add_argument("--overlap-trials", type=int, default=None, help="Trials per overlap cell")
    harness.add_argument("--seed", type=int, default=0)
    harness.add_argument("--output", default="json", choices=list(OUTPUTS))
    return parser


def main(argv: list[str] | None = None) -> int:
    """CLI entry point."""
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        if args.command == "estimate":
            config = CliConfig(
                input_path=str(Path(args.input_path)), format=args.format, eps=args.eps,
                delta=args.delta, method=args.method, seed=args.seed, output=args.output,
            )
            return run(config)
        config = HarnessConfig(
            experiment=args.experiment, seed=args.seed,
            trials=args.trials, overlap_trials=args.overlap_trials,
        )
        return run_harness_command(config, args.output)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
