"""Posterior summaries of a fitted chain: curve fits, warps, registered
curves, shape bands and the location of the feature-1 peak.

Point estimates are posterior medians throughout; bands are pointwise
quantiles of the per-draw functions.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import clamped_design, design_matrix
from .model import Dataset
from .sampler import ChainOutput
from .warp import jupp_inverse


@dataclass
class FunctionalSummary:
    """Pointwise median and equal-tailed band of a random function."""

    grid: np.ndarray
    median: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def as_table(self) -> np.ndarray:
        """Columns ``grid, median, lower, upper``."""
        return np.column_stack([self.grid, self.median, self.lower, self.upper])


def _check(chain: ChainOutput, i=None):
    if len(chain) == 0:
        raise ValueError("chain holds no draws")
    if i is not None and not 0 <= i < chain.c.shape[1]:
        raise IndexError(f"subject index {i} out of range for {chain.c.shape[1]} subjects")


def _band(grid, draws, level, median=None) -> FunctionalSummary:
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    tail = (1.0 - level) / 2.0
    lower, mid, upper = np.quantile(draws, [tail, 0.5, 1.0 - tail], axis=0)
    return FunctionalSummary(
        grid=np.asarray(grid, dtype=float),
        median=mid if median is None else median,
        lower=lower,
        upper=upper,
        level=level,
    )


def warp_draws(chain: ChainOutput, i: int, times) -> np.ndarray:
    """J x m feature-1 warps of subject ``i`` evaluated at ``times``."""
    _check(chain, i)
    kv = chain.kv_w
    phi = jupp_inverse(chain.eta[:, i, :], kv.domain_lo, kv.domain_hi)
    return phi @ design_matrix(kv, times).T


def _spline_draws(kv_s, coef, points):
    """Evaluate per-draw coefficients (J x K) at per-draw points (J x m)."""
    J, m = points.shape
    Bs = clamped_design(kv_s, points.ravel()).reshape(J, m, -1)
    return np.einsum("jmk,jk->jm", Bs, coef)


def curve_draws(chain: ChainOutput, i: int, times) -> np.ndarray:
    """J x m mean curves of subject ``i``."""
    times = np.asarray(times, dtype=float)
    h1 = warp_draws(chain, i, times)
    h2 = chain.rho[:, None] * (h1 - times) + times
    f1 = _spline_draws(chain.kv_s, chain.gamma1, h1)
    f2 = _spline_draws(chain.kv_s, chain.gamma2, h2)
    pi = chain.pi[:, i, None]
    return chain.c[:, i, None] + pi * f1 + (1.0 - pi) * f2


def fitted_curve(chain: ChainOutput, i: int, times, level: float = 0.95) -> FunctionalSummary:
    """Posterior of the expected curve of subject ``i`` at ``times``."""
    return _band(times, curve_draws(chain, i, times), level)


def warp_summary(chain: ChainOutput, i: int, times, level: float = 0.95) -> FunctionalSummary:
    """Pointwise median warp of subject ``i`` with its band."""
    return _band(times, warp_draws(chain, i, times), level)


def register_curve(chain: ChainOutput, i: int, data: Dataset, feature: int = 1):
    """Move subject ``i``'s observation times onto the common time scale.

    Returns ``(new_times, values)``; the values are the observed ones,
    untouched. ``feature=2`` registers against the scaled warp
    ``rho (h - t) + t`` draw by draw before taking the median.
    """
    if feature not in (1, 2):
        raise ValueError("feature must be 1 or 2")
    t = data.times[i]
    h = warp_draws(chain, i, t)
    if feature == 2:
        h = chain.rho[:, None] * (h - t) + t
    new_t = np.median(h, axis=0)
    if np.any(np.diff(new_t) <= 0):
        warnings.warn(f"registered times of subject {i} are not strictly increasing", RuntimeWarning, stacklevel=2)
    return new_t, data.values[i]


def shape_estimate(chain: ChainOutput, k: int, grid, level: float = 0.95) -> FunctionalSummary:
    """Shape function ``k`` (1 or 2): median coefficients plugged into the
    basis, with pointwise quantile bands of the per-draw functions."""
    _check(chain)
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    coef = chain.gamma1 if k == 1 else chain.gamma2
    Bs = clamped_design(chain.kv_s, grid)
    point = Bs @ np.median(coef, axis=0)
    return _band(grid, coef @ Bs.T, level, median=point)


def paf_distribution(chain: ChainOutput, grid) -> np.ndarray:
    """Per-draw location of the maximum of feature 1 on ``grid``.

    Ties go to the smallest grid index.
    """
    _check(chain)
    grid = np.asarray(grid, dtype=float)
    F = chain.gamma1 @ clamped_design(chain.kv_s, grid).T
    return grid[np.argmax(F, axis=1)]


def paf_flat_fraction(chain: ChainOutput, grid, rtol: float = 1e-9) -> float:
    """Share of draws whose feature-1 maximum is attained at several grid points."""
    _check(chain)
    F = chain.gamma1 @ clamped_design(chain.kv_s, np.asarray(grid, dtype=float)).T
    top = F.max(axis=1, keepdims=True)
    tol = rtol * np.maximum(np.abs(top), 1.0)
    return float(np.mean(np.sum(F >= top - tol, axis=1) > 1))
