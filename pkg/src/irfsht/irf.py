"""Iterative residual fitting (IRF) over a partition of the harmonic basis.

One pass visits the blocks in order; block k fits the current residual in
the least-squares sense with its own basis functions and subtracts the fit::

    increment_k = A_k r          A_k = (Y_k^H Y_k)^-1 Y_k^H
    r          <- r - Y_k increment_k

Multi-pass IRF repeats the sweep, feeding each pass the residual left by
the previous one and summing the increments per block.  After i passes the
residual equals ``((I - C_K) ... (I - C_1))**i G`` with ``C_k = Y_k A_k``.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .harmonics import CoefficientVector, harmonic_matrix
from .linalg import DEFAULT_PIVOT_TOLERANCE, CholeskyFactor, NotPositiveDefiniteError, cholesky, hermitian, norm2
from .partition import Partition, validate_partition
from .sampling import SampleSet

log = logging.getLogger(__name__)

DEFAULT_OPERATOR_CAP = 4096


class BlockSolveError(NotPositiveDefiniteError):
    """A partition block is rank deficient at the given samples."""

    def __init__(self, block: int, cause: NotPositiveDefiniteError):
        super().__init__(f"block {block}: {cause}", cause.pivot_index)
        self.block = block


class OperatorTooLargeError(MemoryError):
    pass


@dataclass
class BlockSystem:
    indices: np.ndarray
    design: np.ndarray
    factor: CholeskyFactor
    applicator: np.ndarray
    ridge: float = 0.0

    @classmethod
    def from_design(
        cls, indices, design: np.ndarray, ridge: float = 0.0, pivot_tolerance: float = DEFAULT_PIVOT_TOLERANCE
    ) -> "BlockSystem":
        """Factor ``Y^H Y + ridge I`` and cache ``A = (Y^H Y + ridge I)^-1 Y^H``."""
        design_h = hermitian(design)
        normal = design_h @ design
        if ridge:
            normal = normal + ridge * np.eye(design.shape[1])
        factor = cholesky(normal, pivot_tolerance)
        return cls(np.asarray(indices, dtype=int), design, factor, factor.solve(design_h), ridge)

    @property
    def size(self) -> int:
        return self.indices.size

    def fit(self, residual: np.ndarray) -> np.ndarray:
        return self.applicator @ residual

    def projector(self) -> np.ndarray:
        """``C_k = Y_k A_k`` as a dense M x M matrix."""
        return self.design @ self.applicator


def build_block_system(
    samples: SampleSet,
    band_limit: int,
    block,
    ridge: float = 0.0,
    pivot_tolerance: float = DEFAULT_PIVOT_TOLERANCE,
) -> BlockSystem:
    """Design matrix for one block plus its factored normal equations."""
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    indices = np.asarray(block, dtype=int)
    design = harmonic_matrix(band_limit, samples.theta, samples.phi, indices)
    return BlockSystem.from_design(indices, design, ridge, pivot_tolerance)


def build_block_systems(
    samples: SampleSet,
    partition: Partition,
    ridge: float = 0.0,
    fallback_ridge: float | None = None,
    pivot_tolerance: float = DEFAULT_PIVOT_TOLERANCE,
) -> tuple[list[BlockSystem], list[str]]:
    """Build every block system, returning them with any warnings raised.

    A rank-deficient block raises :class:`BlockSolveError` unless
    ``fallback_ridge`` is given, in which case the block is rebuilt with
    that ridge and a warning is recorded.
    """
    systems, warnings = [], []
    if ridge > 0:
        warnings.append(f"ridge {ridge:g} active on all blocks")
    for k, block in enumerate(partition.blocks):
        try:
            systems.append(build_block_system(samples, partition.band_limit, block, ridge, pivot_tolerance))
        except NotPositiveDefiniteError as exc:
            if not fallback_ridge:
                raise BlockSolveError(k, exc) from exc
            msg = f"block {k} rank deficient ({exc}); refit with ridge {fallback_ridge:g}"
            log.warning(msg)
            warnings.append(msg)
            try:
                systems.append(
                    build_block_system(samples, partition.band_limit, block, ridge + fallback_ridge, pivot_tolerance)
                )
            except NotPositiveDefiniteError as exc2:
                raise BlockSolveError(k, exc2) from exc2
    return systems, warnings


def irf_pass(
    systems: list[BlockSystem], residual: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray, list[float]]:
    """One sweep over the blocks.

    Returns the per-block coefficient increments, the final residual and
    the residual norm after each block step.
    """
    residual = np.array(residual, dtype=np.complex128)
    increments, norms = [], []
    for system in systems:
        increment = system.fit(residual)
        residual -= system.design @ increment
        increments.append(increment)
        norms.append(norm2(residual))
    return increments, residual, norms


@dataclass
class IrfConfig:
    passes: int = 200
    tolerance: float | None = None
    ridge: float = 0.0
    fallback_ridge: float | None = None
    record_trace: bool = False
    partial_on_error: bool = False
    pivot_tolerance: float = DEFAULT_PIVOT_TOLERANCE

    def __post_init__(self):
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be non-negative")


@dataclass
class FitReport:
    coefficients: CoefficientVector
    residual: np.ndarray
    per_pass_epsilon_max: list[float] = field(default_factory=list)
    per_pass_residual_norm2: list[float] = field(default_factory=list)
    # entry 0 is ||G||, then one entry per block step of every pass
    per_step_residual_norm2: list[float] = field(default_factory=list)
    timings_ms: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    increments: list[np.ndarray] = field(default_factory=list)
    passes_run: int = 0
    metadata: dict = field(default_factory=dict)

    def passes_to(self, threshold: float) -> int | None:
        """First pass (1-based) whose epsilon_max is below ``threshold``."""
        for i, eps in enumerate(self.per_pass_epsilon_max, start=1):
            if eps < threshold:
                return i
        return None

    def to_csv(self, path: str | Path, timing: bool = True) -> None:
        """Per-pass trace: ``pass,epsilon_max,residual_norm2,elapsed_ms``.

        With ``timing=False`` the elapsed column is left empty so repeated
        runs produce byte-identical files.
        """
        eps = self.per_pass_epsilon_max or [float("nan")] * self.passes_run
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["pass", "epsilon_max", "residual_norm2", "elapsed_ms"])
            for i in range(self.passes_run):
                elapsed = f"{self.timings_ms[i]:.3f}" if timing else ""
                writer.writerow([i + 1, f"{eps[i]:.17g}", f"{self.per_pass_residual_norm2[i]:.17g}", elapsed])

    def metadata_text(self) -> str:
        lines = [f"{key}={value}" for key, value in self.metadata.items()]
        lines.append(f"passes_run={self.passes_run}")
        lines += [f"warning={w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def epsilon_max(reference: CoefficientVector, estimate: CoefficientVector) -> float:
    """Largest absolute coefficient error."""
    if reference.band_limit != estimate.band_limit:
        raise ValueError(f"band limits differ: {reference.band_limit} vs {estimate.band_limit}")
    return float(np.max(np.abs(reference.values - estimate.values)))


def multi_pass_irf(
    samples: SampleSet,
    partition: Partition,
    config: IrfConfig | None = None,
    reference: CoefficientVector | None = None,
    systems: list[BlockSystem] | None = None,
) -> FitReport:
    """Run IRF passes until the pass budget or tolerance is reached.

    With ``reference`` the per-pass epsilon_max is recorded and the tolerance
    applies to it; otherwise the tolerance applies to the residual norm.
    """
    config = config or IrfConfig()
    if samples.values is None:
        raise ValueError("sample set carries no signal values")
    validate_partition(partition)
    if reference is not None and reference.band_limit != partition.band_limit:
        raise ValueError("reference band limit does not match partition")
    warnings: list[str] = []
    if systems is None:
        systems, warnings = build_block_systems(
            samples, partition, config.ridge, config.fallback_ridge, config.pivot_tolerance
        )
    total = np.zeros(partition.band_limit**2, dtype=np.complex128)
    residual = samples.values.copy()
    report = FitReport(CoefficientVector(partition.band_limit, total), residual, warnings=list(warnings))
    report.per_step_residual_norm2.append(norm2(residual))

    for i in range(1, config.passes + 1):
        start = time.perf_counter()
        try:
            increments, residual, norms = irf_pass(systems, residual)
            if not np.all(np.isfinite(residual)):
                raise FloatingPointError(f"non-finite residual in pass {i}")
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            if not config.partial_on_error:
                raise
            report.warnings.append(f"stopped after {i - 1} passes: {exc}")
            break
        pass_increment = np.zeros_like(total)
        for system, inc in zip(systems, increments):
            pass_increment[system.indices] += inc
        total += pass_increment
        report.timings_ms.append(1e3 * (time.perf_counter() - start))
        report.per_step_residual_norm2.extend(norms)
        report.per_pass_residual_norm2.append(norms[-1])
        if config.record_trace:
            report.increments.append(pass_increment)
        report.passes_run = i
        report.residual = residual
        if reference is not None:
            report.per_pass_epsilon_max.append(float(np.max(np.abs(reference.values - total))))
        if config.tolerance is not None:
            measure = report.per_pass_epsilon_max[-1] if reference is not None else norms[-1]
            if measure < config.tolerance:
                break

    report.coefficients = CoefficientVector(partition.band_limit, total)
    report.metadata.update(
        band_limit=partition.band_limit, points=len(samples), partition=partition.choice.value,
        blocks=len(partition), ridge=config.ridge,
    )
    return report


def residual_operator(systems: list[BlockSystem], passes: int, max_points: int = DEFAULT_OPERATOR_CAP) -> np.ndarray:
    """``((I - C_K) ... (I - C_1))**passes`` as a dense matrix."""
    m = systems[0].design.shape[0]
    if m > max_points:
        raise OperatorTooLargeError(f"{m} samples exceeds the operator cap of {max_points}")
    sweep = np.eye(m, dtype=np.complex128)
    for system in systems:
        sweep = sweep - system.design @ (system.applicator @ sweep)
    return np.linalg.matrix_power(sweep, passes)


def residual_operator_check(
    samples: SampleSet,
    partition: Partition,
    systems: list[BlockSystem] | None = None,
    passes: int = 1,
    max_points: int = DEFAULT_OPERATOR_CAP,
) -> float:
    """Max-abs gap between the product-operator residual and the IRF residual."""
    if passes < 0:
        raise ValueError("passes must be >= 0")
    if systems is None:
        systems, _ = build_block_systems(samples, partition)
    operator = residual_operator(systems, passes, max_points)
    predicted = operator @ samples.values
    if passes == 0:
        actual = samples.values
    else:
        actual = multi_pass_irf(samples, partition, IrfConfig(passes=passes), systems=systems).residual
    return float(np.max(np.abs(predicted - actual)))
