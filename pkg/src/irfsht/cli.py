"""Command-line entry point: ``irfsht --band-limit 15 --scheme optimal ...``.

Exit status is 0 on success, 1 when the solver fails and 2 for bad
configuration.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .experiment import CONVERGED, ExperimentConfig, run_experiment, sweep_sample_counts
from .irf import OperatorTooLargeError
from .partition import Partition, PartitionError
from .sampling import SamplingScheme, SchemeKind

EXIT_SOLVER = 1
EXIT_CONFIG = 2


class ConfigError(Exception):
    pass


def _multipliers(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irfsht", description="Multi-pass iterative residual fitting experiments.")
    p.add_argument("--band-limit", type=int, required=True, metavar="L")
    p.add_argument("--scheme", choices=[k.value for k in SchemeKind], default="optimal")
    p.add_argument("--n-theta", type=int)
    p.add_argument("--n-phi", type=int)
    p.add_argument("--nside", type=int)
    p.add_argument("--multiplier", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--partition", default="4", help="1, 2, 3, 4 or a partition JSON file")
    p.add_argument("--passes", type=int, default=200)
    p.add_argument("--tolerance", type=float, help="stop once epsilon_max falls below this")
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--fallback-ridge", type=float, help="ridge used only for rank-deficient blocks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--validate-residual", action="store_true", help="check the product-operator residual identity")
    p.add_argument("--out", type=Path, help="per-pass trace CSV")
    p.add_argument("--samples-out", type=Path, help="write the sampled signal as CSV")
    p.add_argument("--no-timing", action="store_true", help="leave elapsed_ms empty for reproducible output")
    p.add_argument("--sweep", type=_multipliers, metavar="M1,M2,...", help="sweep sample multipliers (optimal scheme)")
    p.add_argument("--sweep-seeds", type=int, default=1, metavar="N", help="seeds per multiplier in a sweep")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.partition in {"1", "2", "3", "4"}:
        partition: int | Partition = int(args.partition)
    else:
        path = Path(args.partition)
        if not path.is_file():
            raise ConfigError(f"partition must be 1-4 or an existing file, got {args.partition!r}")
        partition = Partition.load(path)
    try:
        scheme = SamplingScheme(
            SchemeKind(args.scheme), n_theta=args.n_theta, n_phi=args.n_phi, nside=args.nside,
            multiplier=args.multiplier, count=args.count,
        )
        return ExperimentConfig(
            band_limit=args.band_limit, scheme=scheme, partition=partition, passes=args.passes,
            seed=args.seed, tolerance=args.tolerance, ridge=args.ridge, fallback_ridge=args.fallback_ridge,
            output_path=args.out, samples_path=args.samples_out,
            validate_residual_operator=args.validate_residual, timing=not args.no_timing,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run(args: argparse.Namespace) -> None:
    config = config_from_args(args)
    if config.tolerance is not None and config.tolerance <= 0:
        raise ConfigError("tolerance must be positive")
    config.build_partition()
    if args.sweep:
        sweep = sweep_sample_counts(config, args.sweep, range(config.seed, config.seed + args.sweep_seeds), args.out)
        for mult, median in sweep.median_passes().items():
            print(f"multiplier={mult} median_passes_to_{CONVERGED:g}={median:g}")
        print(f"trend_non_increasing={sweep.trend_holds()}")
        return
    result = run_experiment(config)
    rep = result.report
    print(f"points={len(result.samples)} blocks={rep.metadata['blocks']} passes={rep.passes_run}")
    print(f"epsilon_max={rep.per_pass_epsilon_max[-1]:.3e} residual_norm2={rep.per_pass_residual_norm2[-1]:.3e}")
    if result.operator_discrepancy is not None:
        print(f"operator_discrepancy={result.operator_discrepancy:.3e}")
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _run(args)
    except (ConfigError, PartitionError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError, OperatorTooLargeError) as exc:
        print(f"solver failure (L={args.band_limit}, scheme={args.scheme}, partition={args.partition}): {exc}",
              file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
