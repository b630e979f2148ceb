"""Convergence experiments: random test signal, sampling, multi-pass IRF, CSV traces."""
from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .harmonics import CoefficientVector
from .irf import FitReport, IrfConfig, build_block_systems, multi_pass_irf, residual_operator_check
from .partition import Partition, make_partition
from .sampling import SampleSet, SamplingScheme, SchemeKind, attach_signal

log = logging.getLogger(__name__)

CONVERGED = 1e-10


def generate_test_signal(band_limit: int, seed: int = 0) -> CoefficientVector:
    """Coefficients with real and imaginary parts i.i.d. uniform on [-1, 1]."""
    if band_limit < 1:
        raise ValueError("band limit must be >= 1")
    draws = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(band_limit**2, 2))
    return CoefficientVector(band_limit, draws[:, 0] + 1j * draws[:, 1])


def sampling_seed(seed: int) -> int:
    """Seed for point generation, decorrelated from the signal stream."""
    return int(np.random.SeedSequence([seed, 1]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    band_limit: int
    scheme: SamplingScheme
    partition: int | str | Partition = 4
    passes: int = 200
    seed: int = 0
    tolerance: float | None = None
    ridge: float = 0.0
    fallback_ridge: float | None = None
    output_path: Path | None = None
    samples_path: Path | None = None
    validate_residual_operator: bool = False
    timing: bool = True

    def __post_init__(self):
        if self.band_limit < 1:
            raise ValueError("band limit must be >= 1")
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")
        if self.output_path is not None:
            self.output_path = Path(self.output_path)
        if self.samples_path is not None:
            self.samples_path = Path(self.samples_path)

    def build_partition(self) -> Partition:
        if isinstance(self.partition, Partition):
            if self.partition.band_limit != self.band_limit:
                raise ValueError(
                    f"partition is for L={self.partition.band_limit}, experiment uses L={self.band_limit}"
                )
            return self.partition
        return make_partition(self.partition, self.band_limit)

    def build_samples(self) -> SampleSet:
        scheme = self.scheme
        if scheme.kind in (SchemeKind.OPTIMAL, SchemeKind.RANDOM):
            scheme = replace(scheme, seed=sampling_seed(self.seed))
        return scheme.generate(self.band_limit)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reference: CoefficientVector
    samples: SampleSet
    report: FitReport
    operator_discrepancy: float | None = None


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Fit a random band-limited signal and optionally write its trace CSV.

    Solver failures propagate (``BlockSolveError`` and friends); the CLI
    maps them to exit code 1.
    """
    partition = config.build_partition()
    reference = generate_test_signal(config.band_limit, config.seed)
    samples = attach_signal(config.build_samples(), reference)
    irf_config = IrfConfig(
        passes=config.passes, tolerance=config.tolerance, ridge=config.ridge,
        fallback_ridge=config.fallback_ridge,
    )
    systems, warnings = build_block_systems(samples, partition, config.ridge, config.fallback_ridge)
    report = multi_pass_irf(samples, partition, irf_config, reference=reference, systems=systems)
    report.warnings[:0] = warnings
    report.metadata.update(config.scheme.describe(config.band_limit))
    report.metadata.update(seed=config.seed, scheme_exact=config.scheme.kind is not SchemeKind.OPTIMAL)

    discrepancy = None
    if config.validate_residual_operator:
        discrepancy = residual_operator_check(samples, partition, systems, report.passes_run)
        report.metadata["operator_discrepancy"] = f"{discrepancy:.6e}"
    log.info(
        "L=%d %s partition=%s: %d passes, epsilon_max=%.3e",
        config.band_limit, config.scheme.kind.value, partition.choice.value,
        report.passes_run, report.per_pass_epsilon_max[-1],
    )
    if config.output_path is not None:
        report.to_csv(config.output_path, timing=config.timing)
        metadata_path(config.output_path).write_text(report.metadata_text())
    if config.samples_path is not None:
        samples.to_csv(config.samples_path)
    return ExperimentResult(config, reference, samples, report, discrepancy)


def metadata_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + ".meta.txt")


@dataclass
class SweepResult:
    multipliers: list[int]
    seeds: list[int]
    results: dict[int, list[ExperimentResult]] = field(default_factory=dict)

    def median_passes(self, threshold: float = CONVERGED) -> dict[int, float]:
        """Median over seeds of passes needed to get epsilon_max below ``threshold``.

        Runs that never reach it count as ``inf``.
        """
        out = {}
        for mult in self.multipliers:
            counts = [r.report.passes_to(threshold) for r in self.results[mult]]
            out[mult] = statistics.median(float("inf") if c is None else c for c in counts)
        return out

    def trend_holds(self, threshold: float = CONVERGED) -> bool:
        """More samples never need more passes (median over seeds)."""
        medians = [self.median_passes(threshold)[m] for m in sorted(self.multipliers)]
        return all(a >= b for a, b in zip(medians, medians[1:]))


def sweep_sample_counts(
    config: ExperimentConfig,
    multipliers=(2, 4, 6),
    seeds=None,
    output_path: str | Path | None = None,
) -> SweepResult:
    """Repeat the experiment for each multiplier of L**2 ring samples.

    ``seeds`` defaults to the config seed alone.  The combined CSV holds one
    row per (multiplier, seed, pass).
    """
    if config.scheme.kind is not SchemeKind.OPTIMAL:
        raise ValueError("sample-count sweeps need the optimal-dimensionality-style scheme")
    seeds = [config.seed] if seeds is None else list(seeds)
    sweep = SweepResult(list(multipliers), seeds)
    for mult in multipliers:
        sweep.results[mult] = [
            run_experiment(replace(
                config, scheme=replace(config.scheme, multiplier=mult), seed=seed,
                output_path=None, samples_path=None,
            ))
            for seed in seeds
        ]
    if output_path is not None:
        with open(output_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["multiplier", "seed", "pass", "epsilon_max", "residual_norm2", "elapsed_ms"])
            for mult in multipliers:
                for res in sweep.results[mult]:
                    rep = res.report
                    for i in range(rep.passes_run):
                        elapsed = f"{rep.timings_ms[i]:.3f}" if config.timing else ""
                        writer.writerow([
                            mult, res.config.seed, i + 1, f"{rep.per_pass_epsilon_max[i]:.17g}",
                            f"{rep.per_pass_residual_norm2[i]:.17g}", elapsed,
                        ])
    return sweep
