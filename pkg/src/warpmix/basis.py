"""Clamped cubic B-spline bases on a closed interval.

Both the shape functions and the warping functions are expanded in the same
kind of basis: cubic, clamped at both ends, equally spaced interior knots.
Evaluation uses the triangular Cox-de Boor scheme, vectorised over points so
that a whole dataset can be pushed through in one call.
"""

from dataclasses import dataclass, field

import numpy as np

DEGREE = 3


class OutOfDomainError(ValueError):
    """Raised when a basis is evaluated outside its interval."""


@dataclass(frozen=True)
class KnotVector:
    """Clamped knot sequence for a cubic B-spline basis.

    Attributes
    ----------
    domain_lo, domain_hi : float
        Interval the basis lives on.
    interior : ndarray
        Sorted interior knots, strictly inside the interval.
    full_sequence : ndarray
        Interior knots padded with ``DEGREE + 1`` copies of each boundary.
    """

    domain_lo: float
    domain_hi: float
    interior: np.ndarray
    full_sequence: np.ndarray = field(repr=False)
    degree: int = DEGREE

    @property
    def dimension(self) -> int:
        return len(self.interior) + self.degree + 1


def make_knots(lo: float, hi: float, n_interior: int) -> KnotVector:
    """Cubic clamped knots with ``n_interior`` equally spaced interior knots."""
    if not lo < hi:
        raise ValueError(f"domain must satisfy lo < hi, got ({lo}, {hi})")
    if n_interior < 0:
        raise ValueError(f"n_interior must be non-negative, got {n_interior}")
    lo, hi = float(lo), float(hi)
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    full = np.concatenate([np.full(DEGREE + 1, lo), interior, np.full(DEGREE + 1, hi)])
    interior.setflags(write=False)
    full.setflags(write=False)
    return KnotVector(lo, hi, interior, full)


def _check_domain(kv: KnotVector, t: np.ndarray) -> None:
    if t.size and (np.any(t < kv.domain_lo) or np.any(t > kv.domain_hi) or np.any(np.isnan(t))):
        bad = t[(t < kv.domain_lo) | (t > kv.domain_hi) | np.isnan(t)]
        raise OutOfDomainError(
            f"{bad.size} point(s) outside [{kv.domain_lo}, {kv.domain_hi}], e.g. {bad[0]!r}"
        )


def basis_local(kv: KnotVector, t) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero basis values at each point.

    Returns ``(first, values)`` where ``values[m, j]`` is basis function
    ``first[m] + j`` evaluated at ``t[m]``, for ``j = 0..degree``. No domain
    check is made; callers clamp or validate first.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    U = kv.full_sequence
    p = kv.degree
    n_basis = kv.dimension
    span = np.searchsorted(U, t, side="right") - 1
    # right-closed last span so t == hi lands in a nonempty interval
    np.clip(span, p, n_basis - 1, out=span)

    m = t.shape[0]
    left = np.empty((m, p + 1))
    right = np.empty((m, p + 1))
    N = np.zeros((m, p + 1))
    N[:, 0] = 1.0
    for j in range(1, p + 1):
        left[:, j] = t - U[span + 1 - j]
        right[:, j] = U[span + j] - t
        saved = np.zeros(m)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return span - p, N


def eval_basis(kv: KnotVector, t: float) -> np.ndarray:
    """Full basis vector at a single point ``t``."""
    return design_matrix(kv, np.array([t], dtype=float))[0]


def design_matrix(kv: KnotVector, times) -> np.ndarray:
    """Basis matrix with one row per time point (n x dimension)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    _check_domain(kv, times)
    return _scatter(kv, *basis_local(kv, times))


def _scatter(kv: KnotVector, first: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.zeros((first.shape[0], kv.dimension))
    rows = np.arange(first.shape[0])[:, None]
    cols = first[:, None] + np.arange(kv.degree + 1)
    out[rows, cols] = values
    return out


def clamped_design(kv: KnotVector, times) -> np.ndarray:
    """Like :func:`design_matrix` but clamps points into the domain first."""
    times = np.clip(np.asarray(times, dtype=float), kv.domain_lo, kv.domain_hi)
    return _scatter(kv, *basis_local(kv, times))


def spline_values(kv: KnotVector, coef: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Evaluate ``B(t)' coef`` at clamped ``times`` without forming the full matrix."""
    times = np.clip(np.asarray(times, dtype=float), kv.domain_lo, kv.domain_hi)
    first, vals = basis_local(kv, times)
    idx = first[:, None] + np.arange(kv.degree + 1)
    return np.einsum("mj,mj->m", vals, coef[idx])


def greville_abscissae(kv: KnotVector) -> np.ndarray:
    """Knot averages; as coefficients they reproduce ``h(t) = t`` exactly."""
    U = kv.full_sequence
    p = kv.degree
    return np.array([U[i + 1:i + 1 + p].mean() for i in range(kv.dimension)])
