import numpy as np
import pytest
from scipy.special import sph_harm_y

from irfsht.harmonics import CoefficientVector, degrees_and_orders
from irfsht.sampling import (
    attach_signal,
    equiangular_grid,
    healpix_ring_centers,
    optimal_dimensionality_style,
    random_uniform,
)


def scipy_design(band_limit, theta, phi):
    """Full design matrix from scipy's harmonics; independent of our recursion."""
    degrees, orders = degrees_and_orders(band_limit)
    return np.stack([sph_harm_y(l, m, theta, phi) for l, m in zip(degrees, orders)], axis=1)


def direct_least_squares(samples, band_limit):
    design = scipy_design(band_limit, samples.theta, samples.phi)
    solution, *_ = np.linalg.lstsq(design, samples.values, rcond=None)
    return CoefficientVector(band_limit, solution)


def random_coefficients(band_limit, seed):
    rng = np.random.default_rng(seed)
    return CoefficientVector(band_limit, rng.uniform(-1, 1, band_limit**2) + 1j * rng.uniform(-1, 1, band_limit**2))


def scheme_points(kind, band_limit, seed=0):
    """Each scheme scaled to roughly 4 L**2 points (the operating point at L=15)."""
    if kind == "equiangular":
        return equiangular_grid(2 * band_limit, 2 * band_limit + 1)
    if kind == "healpix":
        return healpix_ring_centers(int(np.ceil(band_limit / np.sqrt(3))))
    if kind == "optimal":
        return optimal_dimensionality_style(band_limit, 4, seed)
    return random_uniform(4 * band_limit**2, seed)


SCHEMES = ["equiangular", "healpix", "optimal", "random"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def signal_on(request):
    def make(kind, band_limit, seed=0):
        ref = random_coefficients(band_limit, seed)
        return ref, attach_signal(scheme_points(kind, band_limit, seed), ref)

    return make


ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
