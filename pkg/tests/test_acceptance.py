"""Exit criteria for the package.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""
import math
import statistics
import time

import numpy as np
import pytest

from irfsht.experiment import ExperimentConfig, generate_test_signal, run_experiment, sweep_sample_counts
from irfsht.harmonics import evaluate_harmonic, harmonic_matrix
from irfsht.irf import IrfConfig, build_block_systems, epsilon_max, multi_pass_irf, residual_operator_check
from irfsht.linalg import norm2
from irfsht.partition import make_partition, single_block, validate_partition
from irfsht.sampling import (
    SamplingScheme,
    attach_signal,
    equiangular_grid,
    healpix_ring_centers,
    optimal_dimensionality_style,
    random_uniform,
)

from conftest import SCHEMES, direct_least_squares, record_acceptance, scheme_points
from test_harmonics import Y_CLOSED, gauss_grid

L_FIG2 = 15
FIG2_POINTS = {
    "equiangular": lambda: equiangular_grid(30, 31),
    "healpix": lambda: healpix_ring_centers(9),
    "optimal": lambda: optimal_dimensionality_style(15, 4, seed=0),
    "random": lambda: random_uniform(900, seed=0),
}
PASS_BUDGET = 200
CONVERGED = 1e-12
CELL_SECONDS = 30.0


@pytest.fixture(scope="module")
def fig2_runs():
    reference = generate_test_signal(L_FIG2, seed=2017)
    runs = {}
    for scheme, make_points in FIG2_POINTS.items():
        samples = attach_signal(make_points(), reference)
        for choice in (1, 2, 3, 4):
            start = time.perf_counter()
            report = multi_pass_irf(
                samples, make_partition(choice, L_FIG2), IrfConfig(passes=PASS_BUDGET), reference=reference
            )
            runs[scheme, choice] = (report, time.perf_counter() - start, norm2(samples.values))
    return runs


@pytest.fixture(scope="module")
def oracle_runs():
    runs = {}
    for band_limit in (4, 8, 15):
        for scheme in SCHEMES:
            reference = generate_test_signal(band_limit, seed=band_limit)
            samples = attach_signal(scheme_points(scheme, band_limit, seed=1), reference)
            report = multi_pass_irf(samples, single_block(band_limit), IrfConfig(passes=1))
            oracle = direct_least_squares(samples, band_limit)
            runs[band_limit, scheme] = (report, epsilon_max(oracle, report.coefficients), norm2(samples.values))
    return runs


@pytest.fixture(scope="module")
def operator_runs():
    band_limit, max_passes = 8, 10
    runs = {}
    for scheme in SCHEMES:
        reference = generate_test_signal(band_limit, seed=8)
        samples = attach_signal(scheme_points(scheme, band_limit, seed=2), reference)
        g_norm = norm2(samples.values)
        for choice in (1, 2, 3, 4):
            partition = make_partition(choice, band_limit)
            systems, _ = build_block_systems(samples, partition)
            gaps = [residual_operator_check(samples, partition, systems, i) for i in range(max_passes + 1)]
            report = multi_pass_irf(samples, partition, IrfConfig(passes=max_passes), systems=systems)
            runs[scheme, choice] = (report, gaps, g_norm)
    return runs


def test_criterion1_fig2_convergence(fig2_runs):
    failures = []
    slowest = 0.0
    worst = 0.0
    for (scheme, choice), (report, seconds, _) in fig2_runs.items():
        final = report.per_pass_epsilon_max[-1]
        worst = max(worst, final)
        slowest = max(slowest, seconds)
        if not (final < CONVERGED and seconds < CELL_SECONDS):
            failures.append(f"{scheme}/choice{choice}: eps={final:.2e} t={seconds:.1f}s")
    ok = record_acceptance(
        1, not failures,
        f"L=15, 4 schemes x 4 partitions, worst eps_max={worst:.2e} (< {CONVERGED:g}) within {PASS_BUDGET} passes, "
        f"slowest cell {slowest:.2f}s (< {CELL_SECONDS:g}s)" + (f"; failing: {failures}" if failures else ""),
    )
    assert ok, failures


def test_criterion2_oracle_equivalence(oracle_runs):
    worst = max(gap for _, gap, _ in oracle_runs.values())
    bad = [k for k, (_, gap, _) in oracle_runs.items() if not gap <= 1e-10]
    ok = record_acceptance(2, not bad, f"K=1 one pass vs direct least squares, L in (4, 8, 15) x 4 schemes, "
                                       f"worst eps_max={worst:.2e} (<= 1e-10)")
    assert ok, bad


def test_criterion3_residual_operator_identity(operator_runs):
    worst = max(max(gaps) / g for _, gaps, g in operator_runs.values())
    bad = [k for k, (_, gaps, g) in operator_runs.items() if not max(gaps) < 1e-9 * g]
    ok = record_acceptance(3, not bad, f"product-operator residual, L=8, 4 partitions x 4 schemes, i=0..10, "
                                       f"worst discrepancy/||G||={worst:.2e} (< 1e-9)")
    assert ok, bad


@pytest.mark.parametrize("band_limit", [range(1, 21)], ids=["L1-20"])
def test_criterion4_partition_arithmetic(band_limit):
    problems = []
    for L in band_limit:
        parts = {c: make_partition(c, L) for c in (1, 2, 3, 4)}
        for c, p in parts.items():
            try:
                validate_partition(p)
            except ValueError as exc:
                problems.append(f"L={L} choice{c}: {exc}")
            if sum(p.sizes) != L * L:
                problems.append(f"L={L} choice{c}: sizes sum to {sum(p.sizes)}")
        if parts[1].sizes != [2 * k - 1 for k in range(1, L + 1)]:
            problems.append(f"L={L} choice1 sizes")
        if parts[4].sizes != [L] * L:
            problems.append(f"L={L} choice4 sizes")
        if len(parts[3]) != 2 * L - 1:
            problems.append(f"L={L} choice3 count")
        if len(parts[2]) != math.ceil(L / 2):
            problems.append(f"L={L} choice2 count")
    ok = record_acceptance(4, not problems, "partitions valid for L=1..20, sum N_k = L^2, choice sizes/counts as required")
    assert ok, problems


def test_criterion5_monotone_residual(fig2_runs, oracle_runs, operator_runs):
    runs = list(fig2_runs.values()) + list(oracle_runs.values()) + list(operator_runs.values())
    worst = -np.inf
    bad = 0
    for report, _, g_norm in runs:
        rise = np.max(np.diff(report.per_step_residual_norm2)) / g_norm
        worst = max(worst, rise)
        bad += rise > 1e-12
    ok = record_acceptance(5, bad == 0, f"{len(runs)} runs from criteria 1-3, largest step increase "
                                        f"{worst:.2e} x ||G|| (<= 1e-12)")
    assert ok


SEEDS = range(11)


def _median_passes(choice, multiplier):
    counts = []
    for seed in SEEDS:
        config = ExperimentConfig(
            L_FIG2, SamplingScheme("optimal", multiplier=multiplier), partition=choice,
            passes=PASS_BUDGET, tolerance=1e-10, seed=seed,
        )
        counts.append(run_experiment(config).report.passes_to(1e-10) or math.inf)
    return statistics.median(counts)


def test_criterion6_ordering_claims():
    choice1 = _median_passes(1, 4)
    choice4 = _median_passes(4, 4)
    trends = {}
    for choice in (1, 2, 3, 4):
        config = ExperimentConfig(L_FIG2, SamplingScheme("optimal"), partition=choice, passes=PASS_BUDGET,
                                  tolerance=1e-10)
        trends[choice] = sweep_sample_counts(config, (2, 4, 6), seeds=SEEDS)
    medians = {c: s.median_passes(1e-10) for c, s in trends.items()}
    trend_ok = all(s.trend_holds(1e-10) for s in trends.values())
    ok = record_acceptance(
        6, choice4 <= choice1 and trend_ok,
        f"median passes to 1e-10 over 11 seeds: choice4={choice4:g} <= choice1={choice1:g}; "
        f"multipliers 2/4/6 per choice {({c: tuple(m.values()) for c, m in medians.items()})} non-increasing",
    )
    assert ok


def test_criterion7_basis_correctness():
    theta, phi, w = gauss_grid(L_FIG2)
    design = harmonic_matrix(L_FIG2, theta, phi)
    gram_error = np.max(np.abs(design.conj().T @ (w[:, None] * design) - np.eye(L_FIG2**2)))
    rng = np.random.default_rng(7)
    spot_error = 0.0
    for t, p in zip(rng.uniform(0, math.pi, 25), rng.uniform(0, 2 * math.pi, 25)):
        for lm, closed in Y_CLOSED.items():
            spot_error = max(spot_error, abs(evaluate_harmonic(lm, (t, p)) - closed(t, p)))
    ok = record_acceptance(7, gram_error < 1e-10 and spot_error < 1e-12,
                           f"Gram of 225 harmonics off identity by {gram_error:.2e} (< 1e-10); "
                           f"closed-form l<=2 spot error {spot_error:.2e} (< 1e-12)")
    assert ok
