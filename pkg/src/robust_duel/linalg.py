"""Dense SPD helpers: Cholesky, solves, elliptical norms, rank-one updates.

Matrices are plain ``numpy`` arrays. Factorizations are recomputed from the
full matrix whenever needed; at the dimensions used here this costs nothing
and avoids drift from incremental updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DimensionMismatch, NotPositiveDefinite

PIVOT_FLOOR = 1e-14


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular ``lower`` with ``lower @ lower.T`` equal to the source."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def cholesky(m) -> CholFactor:
    m = _as_square(m)
    try:
        lower = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(lower) ** 2
    if not np.all(pivots > PIVOT_FLOOR):
        raise NotPositiveDefinite(f"pivot {pivots.min():.3e} below {PIVOT_FLOOR}")
    return CholFactor(lower)


def _check_vec(f: CholFactor, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.dim:
        raise DimensionMismatch(f"factor is {f.dim}x{f.dim}, vector has length {b.shape[0]}")
    return b


def solve(f: CholFactor, b) -> np.ndarray:
    """Solve ``m x = b`` given ``f = cholesky(m)``. ``b`` may be (d,) or (d, k)."""
    b = _check_vec(f, b)
    y = solve_triangular(f.lower, b, lower=True, check_finite=False)
    return solve_triangular(f.lower.T, y, lower=False, check_finite=False)


def whiten(f: CholFactor, v) -> np.ndarray:
    """Return ``L^{-1} v``; its Euclidean norm is the elliptical norm of ``v``.

    Accepts a single vector (d,) or a stack of row vectors (n, d).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return solve_triangular(f.lower, _check_vec(f, v), lower=True, check_finite=False)
    if v.shape[1] != f.dim:
        raise DimensionMismatch(f"factor is {f.dim}x{f.dim}, rows have length {v.shape[1]}")
    return solve_triangular(f.lower, v.T, lower=True, check_finite=False).T


def elliptical_norm(f: CholFactor, v) -> float | np.ndarray:
    """``sqrt(v^T m^{-1} v)``; row-wise when ``v`` is 2-d."""
    z = whiten(f, v)
    return np.sqrt(np.sum(z * z, axis=-1))


def rank_one_add(m, v, c: float) -> np.ndarray:
    """Return ``m + c v v^T`` as a new, exactly symmetric matrix."""
    if c < 0:
        raise ValueError("rank-one coefficient must be nonnegative")
    m = _as_square(m)
    v = np.asarray(v, dtype=float)
    if v.shape != (m.shape[0],):
        raise DimensionMismatch(f"matrix is {m.shape}, vector has shape {v.shape}")
    out = m + c * np.outer(v, v)
    # np.outer is symmetric entrywise already; averaging guards against inputs
    # that were only approximately symmetric.
    return 0.5 * (out + out.T)


def is_psd_difference(big, small, jitter: float = 1e-12) -> bool:
    """True when ``big - small`` is PSD, tested by factorizing ``big - small + jitter I``."""
    diff = _as_square(big) - _as_square(small)
    diff = 0.5 * (diff + diff.T) + jitter * np.eye(diff.shape[0])
    try:
        np.linalg.cholesky(diff)
    except np.linalg.LinAlgError:
        return False
    return True
