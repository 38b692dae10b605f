"""Monotone warping functions and their unconstrained (Jupp) parameterisation.

A warp is a cubic spline ``h(t) = B_w(t)' phi`` whose coefficients are
strictly increasing with the first and last pinned to the domain bounds.
The Jupp map sends such a coefficient vector to the log-ratios of its
consecutive increments, which range over all of R^(Q-2); that is the space
the sampler and the phase regression work in.
"""

import numpy as np

from .basis import KnotVector, design_matrix


def jupp(phi) -> np.ndarray:
    """Log-ratios of consecutive increments of ordered coefficients.

    Works on the last axis, so a stack of coefficient vectors (N x Q) maps
    to an N x (Q-2) array.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape[-1] < 3:
        raise ValueError("need at least 3 ordered coefficients")
    d = np.diff(phi, axis=-1)
    if np.any(d <= 0):
        raise ValueError("warp coefficients must be strictly increasing")
    return np.log(d[..., 1:]) - np.log(d[..., :-1])


def jupp_inverse(eta_tilde, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Ordered coefficients on ``[lo, hi]`` from unconstrained log-ratios."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    eta = np.asarray(eta_tilde, dtype=float)
    zeros = np.zeros(eta.shape[:-1] + (1,))
    log_d = np.concatenate([zeros, np.cumsum(eta, axis=-1)], axis=-1)
    w = np.exp(log_d - log_d.max(axis=-1, keepdims=True))
    w /= w.sum(axis=-1, keepdims=True)
    phi = lo + (hi - lo) * np.concatenate([zeros, np.cumsum(w, axis=-1)], axis=-1)
    phi[..., -1] = hi
    return phi


def warp_time(kv_w: KnotVector, phi, t):
    """Evaluate ``h(t) = B_w(t)' phi``; scalar in, scalar out."""
    scalar = np.ndim(t) == 0
    out = design_matrix(kv_w, t) @ np.asarray(phi, dtype=float)
    return float(out[0]) if scalar else out


def scale_warp(h_of_t, t, rho: float):
    """Shrink (rho < 1) or amplify (rho > 1) a warp's departure from identity."""
    if rho < 0:
        raise ValueError(f"rho must be non-negative, got {rho}")
    return rho * (np.asarray(h_of_t) - t) + t if np.ndim(h_of_t) else rho * (h_of_t - t) + t


def center_etas(etas, target) -> np.ndarray:
    """Shift rows so that their column means equal ``target``."""
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    return etas - etas.mean(axis=0) + np.asarray(target, dtype=float)
