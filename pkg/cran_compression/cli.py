"""
Command-line interface.

    cran-compression run --preset schemes_vs_omega --drops 20 --out omega.csv
    cran-compression sweep --scenario robustness --axis capacity --values 2,4,6
    cran-compression selftest
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import math
import sys
from collections.abc import Callable, Sequence

import numpy as np

from .channel_model import ChannelSet
from .compression import MmseVariant, max_rate_compress_form, mmse_compress
from .config import PRESETS, ExperimentConfig, load_config, preset_config
from .errors import CranError
from .experiment import Experiment
from .greedy import greedy_compress
from .hermitian import LN2, HermitianMatrix
from .output_files import write_results
from .rates import sum_rate
from .robust import UncertaintyBounds, robust_compress_form
from .run_options import RunOptions
from .schemes import CompressionScheme, MmseTarget, Scenario, SweepAxis
from .selection import stream_gains

SCALAR_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-6


def _add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", help="JSON experiment config")
    source.add_argument("--preset", choices=sorted(PRESETS), help="bundled study")
    parser.add_argument("--scenario", choices=[s.value for s in Scenario])
    parser.add_argument("--seed", type=int, help="base seed (drop d uses seed + d)")
    parser.add_argument("--drops", type=int, help="Monte-Carlo drops per sweep point")
    parser.add_argument("--out", help="CSV path (default: <scenario>.csv)")
    parser.add_argument("--max-concurrency", type=int, default=4, help="drops run at once")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cran-compression",
        description="Distributed fronthaul compression simulator for the cloud-RAN uplink",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging threshold (default: WARNING)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one scenario")
    _add_experiment_arguments(run)

    sweep = commands.add_parser("sweep", help="vary one configuration axis")
    _add_experiment_arguments(sweep)
    sweep.add_argument("--axis", required=True, choices=[a.value for a in SweepAxis])
    sweep.add_argument("--values", required=True, help="comma-separated axis values")

    commands.add_parser("selftest", help="check the closed-form scalar cases")
    return parser


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid --values {text!r}: {e}") from e


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Assemble the experiment config from a file or preset plus command-line overrides."""
    cfg: ExperimentConfig
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        cfg = {}
    if args.scenario:
        if args.scenario != cfg.get("scenario", args.scenario):
            cfg.pop("schemes", None)
            cfg.pop("sweep_axis", None)
            cfg.pop("sweep_values", None)
        cfg["scenario"] = args.scenario
    if args.seed is not None:
        cfg["base_seed"] = args.seed
    if args.drops is not None:
        cfg["n_drops"] = args.drops
    if getattr(args, "axis", None):
        cfg["sweep_axis"] = args.axis
        cfg["sweep_values"] = _parse_values(args.values)
    return cfg


def _run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    options: RunOptions = {"max_concurrency": args.max_concurrency}
    experiment = Experiment(cfg, options)
    result = asyncio.run(experiment.run())
    files = write_results(result, args.out)
    print(f"{files.csv_path} ({len(result.rows)} rows), metadata {files.metadata_path}")
    return 0


def _selftest_checks() -> list[tuple[str, float, Callable[[], float]]]:
    """(name, tolerance, error) triples; a check passes when its error is below the tolerance."""

    def max_rate() -> float:
        design = max_rate_compress_form(HermitianMatrix.diagonal([4.0]), 1.0)
        return max(abs(design.gains[0] - 0.25), abs(design.mu - 0.6))

    def mmse() -> float:
        variant = MmseVariant(target=MmseTarget.DIRECT, side_info=False)
        design = mmse_compress([[math.sqrt(3.0)]], [[1.0]], [[1.0]], 1.0, variant)
        return max(abs(design.gains[0] - 0.25), abs(design.mu - 2.0))

    def robust() -> float:
        bounds = UncertaintyBounds(lower=-0.4, upper=0.4)
        design = robust_compress_form(HermitianMatrix.diagonal([4.0]), 1.0, bounds)
        alpha = 1.0 / 4.4
        guaranteed = math.log2(1.0 + 3.6 * alpha) - math.log2(1.0 + alpha)
        return max(abs(design.gains[0] - alpha), abs((design.worst_case_rate or 0.0) - guaranteed))

    def penalized_update() -> float:
        alpha = float(stream_gains([4.0], 0.0, 1.0 / LN2)[0])
        return abs(alpha - (-5.0 + math.sqrt(57.0)) / 8.0)

    def chain_rule() -> float:
        rng = np.random.default_rng(7)
        shape = (3, 2, 3)
        draws = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
        channels = ChannelSet.from_matrices(list(draws))
        solution = greedy_compress(channels, [2.0, 1.5, 1.0], CompressionScheme.MAXRATE_SI)
        total = sum_rate(channels.sigma_x, channels, solution)
        return abs(sum(solution.step_objectives) - total)

    return [
        ("max-rate scalar", SCALAR_TOLERANCE, max_rate),
        ("mmse scalar", SCALAR_TOLERANCE, mmse),
        ("robust scalar", SCALAR_TOLERANCE, robust),
        ("penalized update scalar", SCALAR_TOLERANCE, penalized_update),
        ("chain rule", IDENTITY_TOLERANCE, chain_rule),
    ]


def _selftest() -> int:
    failures = 0
    for name, tolerance, check in _selftest_checks():
        try:
            error = check()
        except CranError as e:
            print(f"FAIL {name}: {e}")
            failures += 1
            continue
        if error < tolerance:
            print(f"PASS {name}")
        else:
            print(f"FAIL {name}: error {error:.3e}")
            failures += 1
    return 1 if failures else 0


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the `cran-compression` command."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "selftest":
            return _selftest()
        return _run(args)
    except (CranError, RuntimeError, argparse.ArgumentTypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
