"""Synthetic two-feature warped curves and the error metrics used to score fits."""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .basis import KnotVector, design_matrix, greville_abscissae, make_knots
from .model import FEATURE1, FREE, Dataset, GroundTruth, membership_rescale
from .warp import center_etas, jupp, jupp_inverse


@dataclass
class SimConfig:
    N: int = 50
    n: int = 30
    sigma_c: float = 0.2
    sigma_eps: float = 0.085
    sigma2_eta: float = 1.5
    rho_true: float = 0.4
    dirichlet_alpha: float = 0.5
    label_fraction: float = 0.05
    n_labels: Optional[int] = None
    seed: int = 0
    n_interior_shape: int = 15
    n_interior_warp: int = 1

    def __post_init__(self):
        if self.N < 2 or self.n < 4:
            raise ValueError("need N >= 2 subjects and n >= 4 points")
        for name in ("sigma_c", "sigma2_eta", "dirichlet_alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.sigma_eps < 0 or self.rho_true < 0:
            raise ValueError("sigma_eps and rho_true must be non-negative")
        if not 0 <= self.label_fraction <= 0.5:
            raise ValueError("label_fraction must lie in [0, 0.5]")
        if self.n_labels is not None and not 0 <= self.n_labels <= self.N:
            raise ValueError("n_labels must lie in [0, N]")


def _f1_raw(t):
    t = np.asarray(t, dtype=float)
    return ndtr((t - 0.7) / 0.2) - 5.0 * (t - 0.3) ** 2


def _f2(t):
    t = np.asarray(t, dtype=float)
    return -ndtr((t - 0.3) / 0.2) + (t - 0.7) ** 2


def _lstsq_coefficients(kv_s: KnotVector, f) -> np.ndarray:
    grid = np.linspace(0.0, 1.0, 101)
    Bs = design_matrix(kv_s, grid)
    return np.linalg.lstsq(Bs, f(grid), rcond=None)[0]


@lru_cache(maxsize=None)
def f1_constant(n_interior: int = 15) -> float:
    """Level added to feature 1 so its fitted coefficients sum to zero.

    A constant shift of a function shifts every least-squares B-spline
    coefficient by the same amount, so the constant is minus their mean.
    """
    return -float(_lstsq_coefficients(make_knots(0.0, 1.0, n_interior), _f1_raw).mean())


def true_shapes(t, n_interior: int = 15):
    """The two pure-membership shapes of the simulation design."""
    return _f1_raw(t) + f1_constant(n_interior), _f2(t)


def fit_true_coefficients(kv_s: KnotVector):
    """Least-squares spline coefficients of the true shapes on 101 points."""
    g1 = _lstsq_coefficients(kv_s, _f1_raw)
    g1 = g1 - g1.mean()
    g2 = _lstsq_coefficients(kv_s, _f2)
    return g1, g2


def n_labelled(cfg: SimConfig) -> int:
    if cfg.n_labels is not None:
        return cfg.n_labels
    k = int(math.floor(cfg.label_fraction * cfg.N + 1e-9))
    if k < 1:
        warnings.warn(
            f"label_fraction={cfg.label_fraction} gives no label for N={cfg.N}; using 1",
            RuntimeWarning,
            stacklevel=2,
        )
        k = 1
    return k


def simulate_dataset(cfg: SimConfig):
    """Draw one dataset from the generative model; returns (Dataset, GroundTruth)."""
    rng = np.random.default_rng(cfg.seed)
    kv_s = make_knots(0.0, 1.0, cfg.n_interior_shape)
    kv_w = make_knots(0.0, 1.0, cfg.n_interior_warp)
    gamma1, gamma2 = fit_true_coefficients(kv_s)
    target = jupp(greville_abscissae(kv_w))
    N, n = cfg.N, cfg.n
    Qs = kv_w.dimension - 2

    c = rng.normal(0.0, cfg.sigma_c, N)
    c -= c.mean()
    pi = rng.beta(cfg.dirichlet_alpha, cfg.dirichlet_alpha, N)
    eta = target + math.sqrt(cfg.sigma2_eta) * rng.standard_normal((N, Qs))
    eta = center_etas(eta, target)
    eps = cfg.sigma_eps * rng.standard_normal((N, n))

    labels = np.full(N, FREE)
    k = n_labelled(cfg)
    if k:
        top = np.argsort(-pi, kind="stable")[:k]
        pi[top] = 1.0
        labels[top] = FEATURE1
    pi = membership_rescale(pi)

    t = np.linspace(0.0, 1.0, n)
    phi = jupp_inverse(eta, 0.0, 1.0)
    Bw = design_matrix(kv_w, t)
    values = []
    for i in range(N):
        h1 = Bw @ phi[i]
        h2 = cfg.rho_true * (h1 - t) + t
        f1 = design_matrix(kv_s, np.clip(h1, 0.0, 1.0)) @ gamma1
        f2 = design_matrix(kv_s, np.clip(h2, 0.0, 1.0)) @ gamma2
        values.append(c[i] + pi[i] * f1 + (1.0 - pi[i]) * f2 + eps[i])

    data = Dataset(
        times=[t.copy() for _ in range(N)],
        values=values,
        labels=labels,
        subject_ids=[f"s{i:03d}" for i in range(N)],
    )
    truth = GroundTruth(
        gamma1=gamma1, gamma2=gamma2, phi=phi, pi=pi, c=c,
        rho=cfg.rho_true, sigma_eps=cfg.sigma_eps, eta=eta,
    )
    return data, truth


def rmise(f_true, f_hat) -> float:
    """Relative squared error ``sum (f - f_hat)^2 / sum f^2`` on a grid."""
    f_true = np.asarray(f_true, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float)
    if f_true.shape != f_hat.shape:
        raise ValueError("f_true and f_hat must have the same shape")
    denom = float(f_true @ f_true)
    if denom == 0:
        raise ValueError("true function is identically zero")
    d = f_true - f_hat
    return float(d @ d) / denom


def standardize_shape(f) -> np.ndarray:
    """Centre and scale to unit sample SD (divisor n - 1)."""
    f = np.asarray(f, dtype=float)
    sd = f.std(ddof=1)
    if not sd > 0:
        raise ValueError("cannot standardise a constant function")
    return (f - f.mean()) / sd


def mode_filter(median_logliks, rel_threshold: float = 0.05, gap_ratio: float = 3.0) -> np.ndarray:
    """Indices of runs in the high-likelihood mode.

    Values are sorted in decreasing order and split at the largest drop
    between neighbours. The split is only made when that drop exceeds
    ``rel_threshold`` times the overall range and ``gap_ratio`` times the
    median of the remaining drops; otherwise every run is kept.
    Returned indices refer to the input order and are sorted.
    """
    v = np.asarray(median_logliks, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two runs")
    order = np.argsort(-v, kind="stable")
    drops = -np.diff(v[order])
    span = v.max() - v.min()
    k = int(np.argmax(drops))
    rest = np.delete(drops, k)
    typical = float(np.median(rest)) if rest.size else 0.0
    if span <= 0 or drops[k] < rel_threshold * span or drops[k] <= gap_ratio * typical:
        return np.sort(order)
    return np.sort(order[: k + 1])


def recovery_metrics(chain, truth: GroundTruth, n_grid: int = 30) -> dict:
    """Shape and warp-scale errors of one fit against its generating truth.

    Shapes are compared on ``n_grid`` equally spaced points of the fitted
    domain, both raw and after standardisation; ``rho`` is scored by the
    squared error of its posterior median.
    """
    from .posterior import shape_estimate

    kv = chain.kv_s
    grid = np.linspace(kv.domain_lo, kv.domain_hi, n_grid)
    Bs = design_matrix(kv, grid)
    out = {"median_loglik": float(np.median(chain.loglik))}
    for k, g_true in ((1, truth.gamma1), (2, truth.gamma2)):
        f_true = Bs @ g_true
        f_hat = shape_estimate(chain, k, grid).median
        out[f"rmise_f{k}"] = rmise(f_true, f_hat)
        out[f"rmise_f{k}_std"] = rmise(standardize_shape(f_true), standardize_shape(f_hat))
    rho_hat = float(np.median(chain.rho))
    out["rho_hat"] = rho_hat
    out["rho_sq_error"] = (rho_hat - truth.rho) ** 2
    return out
