"""Spherical harmonic basis: indexing, Legendre recursion, evaluation, synthesis.

Conventions: orthonormal harmonics with the Condon-Shortley phase,
``Y_l^m(theta, phi) = N_l^m P_l^|m|(cos theta) exp(i m phi)`` and
``Y_l^-m = (-1)^m conj(Y_l^m)``.  Coefficients are stored degree-major,
order ascending within a degree, so ``(l, m)`` lives at ``l*l + l + m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class InvalidIndexError(ValueError):
    """Raised for a (degree, order) pair with |order| > degree or degree < 0."""


@dataclass(frozen=True)
class HarmonicIndex:
    degree: int
    order: int

    def __post_init__(self):
        if self.degree < 0 or abs(self.order) > self.degree:
            raise InvalidIndexError(f"invalid harmonic index (l={self.degree}, m={self.order})")

    @property
    def flat(self) -> int:
        return flat_index(self.degree, self.order)


@dataclass(frozen=True)
class SpherePoint:
    """A point on the unit sphere; longitude is wrapped into [0, 2pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"colatitude {self.theta} outside [0, pi]")
        object.__setattr__(self, "phi", wrap_longitude(self.phi))


def wrap_longitude(phi):
    """Map longitude(s) into [0, 2pi)."""
    wrapped = np.mod(phi, TWO_PI)
    # np.mod can round a tiny negative up to exactly 2pi
    wrapped = np.where(wrapped >= TWO_PI, 0.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass
class CoefficientVector:
    """Band-limited spectrum: ``band_limit**2`` complex values in flat order."""

    band_limit: int
    values: np.ndarray

    def __post_init__(self):
        if self.band_limit < 1:
            raise ValueError("band limit must be positive")
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.band_limit**2,):
            raise ValueError(
                f"expected {self.band_limit**2} coefficients for L={self.band_limit}, "
                f"got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, band_limit: int) -> "CoefficientVector":
        return cls(band_limit, np.zeros(band_limit**2, dtype=np.complex128))

    def __getitem__(self, index: tuple[int, int]) -> complex:
        degree, order = index
        return complex(self.values[flat_index(degree, order)])


def flat_index(degree: int, order: int) -> int:
    if degree < 0 or abs(order) > degree:
        raise InvalidIndexError(f"invalid harmonic index (l={degree}, m={order})")
    return degree * degree + degree + order


def unflatten_index(index: int) -> tuple[int, int]:
    """Inverse of :func:`flat_index`."""
    if index < 0:
        raise InvalidIndexError(f"negative flat index {index}")
    degree = math.isqrt(index)
    return degree, index - degree * degree - degree


def degrees_and_orders(band_limit: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays for all ``band_limit**2`` flat indices."""
    flat = np.arange(band_limit**2)
    degrees = np.floor(np.sqrt(flat)).astype(int)
    # guard against sqrt rounding just below a perfect square
    degrees += (degrees + 1) ** 2 <= flat
    return degrees, flat - degrees * degrees - degrees


def associated_legendre(degree: int, order: int, x: float) -> float:
    """Unnormalized P_l^m(x) with Condon-Shortley phase, for 0 <= m <= l.

    Seeded by ``P_m^m = (-1)^m (2m-1)!! (1-x^2)^(m/2)`` and advanced with
    ``(l-m) P_l^m = (2l-1) x P_{l-1}^m - (l+m-1) P_{l-2}^m``.
    """
    if not 0 <= order <= degree:
        raise ValueError(f"need 0 <= order <= degree, got l={degree}, m={order}")
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [-1, 1]")
    somx2 = math.sqrt((1.0 - x) * (1.0 + x))
    pmm = 1.0
    for k in range(1, order + 1):
        pmm *= -(2 * k - 1) * somx2
    if degree == order:
        return pmm
    prev, cur = pmm, x * (2 * order + 1) * pmm
    for ell in range(order + 2, degree + 1):
        prev, cur = cur, ((2 * ell - 1) * x * cur - (ell + order - 1) * prev) / (ell - order)
    return cur


def normalized_legendre_table(band_limit: int, theta: np.ndarray) -> np.ndarray:
    """Orthonormal-scaled P_l^m(cos theta) for 0 <= m <= l < band_limit.

    Returns an array of shape ``(band_limit, band_limit, len(theta))`` indexed
    ``[l, m]``; entries with m > l are zero.  The normalization is folded into
    the recursion so nothing overflows for moderate band limits.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    x = np.cos(theta)
    s = np.sin(theta)
    out = np.zeros((band_limit, band_limit, theta.size))
    pmm = np.full(theta.size, math.sqrt(1.0 / (4.0 * math.pi)))
    for m in range(band_limit):
        if m > 0:
            pmm = -math.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        out[m, m] = pmm
        if m + 1 < band_limit:
            out[m + 1, m] = math.sqrt(2 * m + 3) * x * pmm
        for ell in range(m + 2, band_limit):
            a = math.sqrt((4 * ell * ell - 1) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1) ** 2 - m * m) / (4 * (ell - 1) ** 2 - 1))
            out[ell, m] = a * (x * out[ell - 1, m] - b * out[ell - 2, m])
    return out


def harmonic_matrix(
    band_limit: int,
    theta: np.ndarray,
    phi: np.ndarray,
    columns: Sequence[int] | np.ndarray | None = None,
) -> np.ndarray:
    """Design matrix of harmonics at the given points.

    Row p holds the harmonics evaluated at ``(theta[p], phi[p])``; column j is
    flat index ``columns[j]`` (all ``band_limit**2`` indices by default).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    if theta.shape != phi.shape:
        raise ValueError("theta and phi must have the same shape")
    if columns is None:
        columns = np.arange(band_limit**2)
    columns = np.asarray(columns, dtype=int)
    if columns.size and (columns.min() < 0 or columns.max() >= band_limit**2):
        raise InvalidIndexError(f"column index outside band limit L={band_limit}")
    degrees, orders = degrees_and_orders(band_limit)
    degrees, orders = degrees[columns], orders[columns]
    table = normalized_legendre_table(band_limit, theta)
    abs_orders = np.abs(orders)
    legendre = table[degrees, abs_orders].T  # (M, n_columns)
    phase = np.exp(1j * np.outer(phi, abs_orders))
    design = legendre * phase
    negative = orders < 0
    if negative.any():
        sign = np.where(abs_orders[negative] % 2 == 1, -1.0, 1.0)
        design[:, negative] = sign * np.conj(design[:, negative])
    return design


def evaluate_harmonic(index: HarmonicIndex | tuple[int, int], point: SpherePoint | tuple[float, float]) -> complex:
    """Y_l^m at a single point."""
    if not isinstance(index, HarmonicIndex):
        index = HarmonicIndex(*index)
    if not isinstance(point, SpherePoint):
        point = SpherePoint(*point)
    design = harmonic_matrix(index.degree + 1, [point.theta], [point.phi], [index.flat])
    return complex(design[0, 0])


def synthesize(coeffs: CoefficientVector, theta, phi) -> np.ndarray:
    """Evaluate the band-limited expansion at each point."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if theta.size == 0:
        raise ValueError("need at least one point")
    return harmonic_matrix(coeffs.band_limit, theta, phi) @ coeffs.values


def points_to_arrays(points: Iterable[SpherePoint]) -> tuple[np.ndarray, np.ndarray]:
    pts = list(points)
    return (
        np.array([p.theta for p in pts], dtype=np.float64),
        np.array([p.phi for p in pts], dtype=np.float64),
    )
