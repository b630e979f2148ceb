"""Point sets on the sphere: equiangular, HEALPix ring centres,
iso-latitude "optimal dimensionality style" rings, and uniform random.

Random draws use numpy's PCG64 generator (``numpy.random.default_rng``),
so a seed reproduces the same points on any platform.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .harmonics import CoefficientVector, SpherePoint, synthesize, wrap_longitude


class SchemeKind(str, enum.Enum):
    EQUIANGULAR = "equiangular"
    HEALPIX = "healpix"
    OPTIMAL = "optimal"
    RANDOM = "random"


@dataclass
class SampleSet:
    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).ravel()
        self.phi = wrap_longitude(np.asarray(self.phi, dtype=np.float64).ravel())
        if self.theta.shape != self.phi.shape:
            raise ValueError("theta and phi lengths differ")
        if self.theta.size < 1:
            raise ValueError("a sample set needs at least one point")
        if np.any(self.theta < 0.0) or np.any(self.theta > math.pi):
            raise ValueError("colatitude outside [0, pi]")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=np.complex128).ravel()
            if self.values.shape != self.theta.shape:
                raise ValueError(
                    f"{self.values.size} values for {self.theta.size} points"
                )

    def __len__(self) -> int:
        return self.theta.size

    @property
    def points(self) -> list[SpherePoint]:
        return [SpherePoint(float(t), float(p)) for t, p in zip(self.theta, self.phi)]

    def to_csv(self, path: str | Path) -> None:
        """Write ``theta,phi,re,im`` rows with 17 significant digits."""
        values = self.values if self.values is not None else np.full(len(self), np.nan + 0j)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["theta", "phi", "re", "im"])
            for t, p, v in zip(self.theta, self.phi, values):
                writer.writerow([f"{t:.17g}", f"{p:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SampleSet":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        theta = [float(r["theta"]) for r in rows]
        phi = [float(r["phi"]) for r in rows]
        values = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
        if np.all(np.isnan(values.real)):
            values = None
        return cls(theta, phi, values)


def equiangular_grid(n_theta: int, n_phi: int) -> SampleSet:
    """Midpoint colatitudes ``pi(2t+1)/(2 n_theta)`` by ``2 pi p / n_phi``; no poles."""
    if n_theta < 1 or n_phi < 1:
        raise ValueError("grid sizes must be positive")
    theta = math.pi * (2 * np.arange(n_theta) + 1) / (2 * n_theta)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    return SampleSet(
        tt.ravel(), pp.ravel(),
        metadata={"scheme": SchemeKind.EQUIANGULAR.value, "n_theta": n_theta, "n_phi": n_phi},
    )


def healpix_rings(nside: int) -> list[tuple[float, np.ndarray]]:
    """(colatitude, longitudes) for each of the ``4 nside - 1`` RING-scheme rings."""
    if nside < 1:
        raise ValueError("nside must be >= 1")
    rings = []
    for i in range(1, 4 * nside):
        if i < nside:
            z = 1.0 - i * i / (3.0 * nside * nside)
            n = 4 * i
            phi = (np.arange(1, n + 1) - 0.5) * math.pi / (2 * i)
        elif i <= 3 * nside:
            z = 4.0 / 3.0 - 2.0 * i / (3.0 * nside)
            n = 4 * nside
            shift = 1.0 if (i + nside) % 2 else 0.5
            phi = (np.arange(1, n + 1) - shift) * math.pi / (2 * nside)
        else:
            k = 4 * nside - i
            z = -(1.0 - k * k / (3.0 * nside * nside))
            n = 4 * k
            phi = (np.arange(1, n + 1) - 0.5) * math.pi / (2 * k)
        rings.append((math.acos(z), phi))
    return rings


def healpix_ring_centers(nside: int) -> SampleSet:
    """The ``12 nside**2`` HEALPix pixel centres in RING order."""
    rings = healpix_rings(nside)
    theta = np.concatenate([np.full(phi.size, t) for t, phi in rings])
    phi = np.concatenate([phi for _, phi in rings])
    return SampleSet(theta, phi, metadata={"scheme": SchemeKind.HEALPIX.value, "nside": nside})


def optimal_dimensionality_style(band_limit: int, multiplier: int, seed: int = 0) -> SampleSet:
    """Iso-latitude rings totalling ``multiplier * L**2`` points.

    ``multiplier/2 * L`` rings at ``pi(2r+1)/(multiplier L)``, each with ``2L``
    equispaced longitudes rotated by a per-ring offset drawn from ``seed``.
    This mimics the ring structure of optimal-dimensionality sampling at an
    inflated count; it is not that scheme's exact point set.
    """
    if band_limit < 1:
        raise ValueError("band limit must be >= 1")
    if multiplier < 2 or multiplier % 2:
        raise ValueError("multiplier must be even and >= 2")
    n_rings = multiplier * band_limit // 2
    n_phi = 2 * band_limit
    theta = math.pi * (2 * np.arange(n_rings) + 1) / (multiplier * band_limit)
    offsets = np.random.default_rng(seed).uniform(0.0, 2 * math.pi / n_phi, size=n_rings)
    phi = 2 * math.pi * np.arange(n_phi)[None, :] / n_phi + offsets[:, None]
    return SampleSet(
        np.repeat(theta, n_phi), phi.ravel(),
        metadata={
            "scheme": SchemeKind.OPTIMAL.value, "band_limit": band_limit,
            "multiplier": multiplier, "seed": seed, "exact": False, "variant": "style",
        },
    )


def uniform_angles(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map unit-interval draws to area-uniform (theta, phi)."""
    return np.arccos(1.0 - 2.0 * np.asarray(u)), 2 * math.pi * np.asarray(v)


def random_uniform(count: int, seed: int = 0) -> SampleSet:
    """``count`` i.i.d. points uniform with respect to ``sin(theta) dtheta dphi``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    draws = np.random.default_rng(seed).random((count, 2))
    theta, phi = uniform_angles(draws[:, 0], draws[:, 1])
    return SampleSet(theta, phi, metadata={"scheme": SchemeKind.RANDOM.value, "count": count, "seed": seed})


def attach_signal(samples: SampleSet, coeffs: CoefficientVector) -> SampleSet:
    """Copy of ``samples`` carrying the band-limited signal values at its points."""
    values = synthesize(coeffs, samples.theta, samples.phi)
    return replace(samples, values=values, metadata=dict(samples.metadata))


@dataclass(frozen=True)
class SamplingScheme:
    """A scheme kind plus its parameters; ``None`` fields get defaults for L."""

    kind: SchemeKind
    n_theta: int | None = None
    n_phi: int | None = None
    nside: int | None = None
    multiplier: int | None = None
    count: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        for name in ("n_theta", "n_phi", "nside", "multiplier", "count"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.multiplier is not None and self.multiplier % 2:
            raise ValueError("multiplier must be even")

    def resolved(self, band_limit: int) -> "SamplingScheme":
        """Fill unset parameters with the defaults used for band limit L.

        Defaults: equiangular ``2L x (2L+1)``; HEALPix ``nside = ceil(L/sqrt 3)``
        (9 at L=15, 972 points); ``multiplier = 4``; ``count = 4 L**2``.
        """
        return replace(
            self,
            n_theta=self.n_theta or 2 * band_limit,
            n_phi=self.n_phi or 2 * band_limit + 1,
            nside=self.nside or math.ceil(band_limit / math.sqrt(3.0)),
            multiplier=self.multiplier or 4,
            count=self.count or 4 * band_limit**2,
        )

    def generate(self, band_limit: int) -> SampleSet:
        s = self.resolved(band_limit)
        if s.kind is SchemeKind.EQUIANGULAR:
            return equiangular_grid(s.n_theta, s.n_phi)
        if s.kind is SchemeKind.HEALPIX:
            return healpix_ring_centers(s.nside)
        if s.kind is SchemeKind.OPTIMAL:
            return optimal_dimensionality_style(band_limit, s.multiplier, s.seed)
        return random_uniform(s.count, s.seed)

    def describe(self, band_limit: int) -> dict:
        s = self.resolved(band_limit)
        params = {
            SchemeKind.EQUIANGULAR: {"n_theta": s.n_theta, "n_phi": s.n_phi},
            SchemeKind.HEALPIX: {"nside": s.nside},
            SchemeKind.OPTIMAL: {"multiplier": s.multiplier, "seed": s.seed},
            SchemeKind.RANDOM: {"count": s.count, "seed": s.seed},
        }[s.kind]
        return {"scheme": s.kind.value, **params}
