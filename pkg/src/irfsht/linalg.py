"""Dense complex linear algebra used by the block solver.

Matrices are plain ``numpy`` arrays.  The Cholesky factorization is
delegated to LAPACK through :mod:`scipy.linalg`; the pivot test on top of
it is ours.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

DEFAULT_PIVOT_TOLERANCE = 1e-12


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """The normal matrix is not numerically positive definite.

    For a normal matrix ``Y^H Y`` this means the design matrix is (close to)
    rank deficient at the given samples.
    """

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


def hermitian(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def norm2(v: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(v).ravel()))


@dataclass
class CholeskyFactor:
    """Lower Cholesky factor of a Hermitian positive definite matrix."""

    lower: np.ndarray

    def solve(self, b: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve((self.lower, True), b, check_finite=False)

    @property
    def min_pivot(self) -> float:
        return float(np.min(np.abs(np.diag(self.lower))) ** 2)


def cholesky(a: np.ndarray, pivot_tolerance: float = DEFAULT_PIVOT_TOLERANCE) -> CholeskyFactor:
    """Factor ``a = L L^H``.

    Raises :class:`NotPositiveDefiniteError` if LAPACK fails or any pivot
    ``L_jj**2`` is at or below ``pivot_tolerance`` times the largest
    diagonal entry of ``a``.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.real(np.diag(a)))) if a.size else 0.0
    if not scale > 0.0:
        raise NotPositiveDefiniteError("normal matrix has no positive diagonal entry", 0)
    try:
        lower = scipy.linalg.cholesky(a, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"Cholesky factorization failed: {exc}") from exc
    pivots = np.abs(np.diag(lower)) ** 2
    bad = np.flatnonzero(pivots <= pivot_tolerance * scale)
    if bad.size:
        j = int(bad[0])
        raise NotPositiveDefiniteError(
            f"pivot {j} is {pivots[j]:.3e}, below {pivot_tolerance:g} x max diagonal {scale:.3e}", j
        )
    return CholeskyFactor(lower)


def solve_hermitian_pd(
    a: np.ndarray, b: np.ndarray, pivot_tolerance: float = DEFAULT_PIVOT_TOLERANCE
) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian positive definite ``a``."""
    return cholesky(a, pivot_tolerance).solve(np.asarray(b, dtype=np.complex128))
