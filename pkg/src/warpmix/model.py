"""State, data containers, mean structure and constraints of the warped
two-feature mixed-membership model.

For subject ``i`` observed at times ``t``::

    m_i(t) = c_i + pi_i f1(h_i(t)) + (1 - pi_i) f2(rho (h_i(t) - t) + t)

with ``f_k(s) = B_s(s)' gamma_k`` and ``h_i(t) = B_w(t)' phi_i``,
``phi_i = jupp_inverse(eta_i)``.
"""

import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag, cho_factor, cho_solve

from .basis import KnotVector, clamped_design, design_matrix, spline_values
from .warp import center_etas, jupp_inverse

FREE, FEATURE1, FEATURE2 = 0, 1, 2
LABEL_NAMES = {FREE: "free", FEATURE1: "feature1", FEATURE2: "feature2"}


class DataError(ValueError):
    """Input data violates the model's structural requirements."""


class DegenerateMembershipError(ValueError):
    """Memberships are constant, so min/max rescaling is undefined."""


@dataclass
class Hyperparameters:
    """Prior and proposal constants.

    Defaults are the simulation-study settings. ``g=None`` means "use the
    number of subjects" for the g-prior on the phase regression.
    """

    a_eps: float = 1e-4
    b_eps: float = 1e-4
    a_c: float = 0.1
    b_c: float = 1.0
    a_lambda: float = 0.01
    b_lambda: float = 0.01
    a_eta: float = 100.0
    b_eta: float = 1.0
    a_rho: float = 1.0
    b_rho: float = 1.0
    alpha: float = 0.5
    g: Optional[float] = None
    dirichlet_scale: float = 1000.0
    target_accept: float = 0.35

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None and f.name == "g":
                continue
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"hyperparameter {f.name} must be positive, got {v}")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")


@dataclass
class Dataset:
    """Irregularly sampled curves, one per subject.

    ``labels`` holds FREE / FEATURE1 / FEATURE2 per subject; ``covariates``
    is N x l (l may be 0) and must not contain an intercept column.
    """

    times: list
    values: list
    covariates: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    subject_ids: Optional[list] = None

    def __post_init__(self):
        self.times = [np.asarray(t, dtype=float) for t in self.times]
        self.values = [np.asarray(y, dtype=float) for y in self.values]
        n = len(self.times)
        if n == 0 or len(self.values) != n:
            raise DataError("times and values must be non-empty and of equal length")
        for i, (t, y) in enumerate(zip(self.times, self.values)):
            if t.shape != y.shape or t.ndim != 1:
                raise DataError(f"subject {i}: times and values differ in shape")
            if not np.all(np.isfinite(y)) or not np.all(np.isfinite(t)):
                raise DataError(f"subject {i}: non-finite observation")
            if np.any(np.diff(t) <= 0):
                raise DataError(f"subject {i}: times must be strictly increasing")
        if self.covariates is None:
            self.covariates = np.zeros((n, 0))
        self.covariates = np.asarray(self.covariates, dtype=float).reshape(n, -1)
        if self.labels is None:
            self.labels = np.zeros(n, dtype=int)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.labels.shape != (n,) or not np.isin(self.labels, (FREE, FEATURE1, FEATURE2)).all():
            raise DataError("labels must be one of free/feature1/feature2 per subject")
        if self.subject_ids is None:
            self.subject_ids = [str(i) for i in range(n)]
        self.subject_ids = [str(s) for s in self.subject_ids]
        self.n_obs = np.array([len(t) for t in self.times])
        self.subject_index = np.repeat(np.arange(n), self.n_obs)
        self.t_flat = np.concatenate(self.times)
        self.y_flat = np.concatenate(self.values)

    @property
    def n_subjects(self) -> int:
        return len(self.times)

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.times, self.values, self.covariates, labels, self.subject_ids)

    def validate_for(self, kv_w: KnotVector) -> None:
        lo, hi = kv_w.domain_lo, kv_w.domain_hi
        if self.t_flat.min() < lo or self.t_flat.max() > hi:
            raise DataError(f"observation times must lie in [{lo}, {hi}]")
        if self.n_obs.min() < kv_w.dimension:
            raise DataError(
                f"every subject needs at least {kv_w.dimension} observations, "
                f"smallest has {self.n_obs.min()}"
            )


@dataclass
class ModelState:
    """One draw of every sampled quantity."""

    c: np.ndarray
    pi: np.ndarray
    eta: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    rho: float
    B: np.ndarray
    sigma2_eps: float
    sigma2_c: float
    sigma2_eta: float
    lambda1: float
    lambda2: float

    def copy(self) -> "ModelState":
        return replace(
            self,
            **{
                f.name: getattr(self, f.name).copy()
                for f in fields(self)
                if isinstance(getattr(self, f.name), np.ndarray)
            },
        )

    @property
    def gamma(self) -> np.ndarray:
        return np.concatenate([self.gamma1, self.gamma2])


@dataclass
class GroundTruth:
    """True generating quantities of a simulated dataset."""

    gamma1: np.ndarray
    gamma2: np.ndarray
    phi: np.ndarray
    pi: np.ndarray
    c: np.ndarray
    rho: float
    sigma_eps: float
    eta: np.ndarray = field(default=None)


def warp_coefficients(state: ModelState, kv_w: KnotVector) -> np.ndarray:
    """N x Q ordered warp coefficients of every subject."""
    return jupp_inverse(state.eta, kv_w.domain_lo, kv_w.domain_hi)


def warped_times(phi_i: np.ndarray, times, kv_w: KnotVector, rho: float):
    """Feature-1 and feature-2 evaluation points for one subject."""
    times = np.asarray(times, dtype=float)
    h = design_matrix(kv_w, times) @ phi_i
    return h, rho * (h - times) + times


def mean_curve(state: ModelState, i: int, times, kv_s: KnotVector, kv_w: KnotVector) -> np.ndarray:
    """Expected curve of subject ``i`` at ``times``."""
    n = len(state.c)
    if not 0 <= i < n:
        raise IndexError(f"subject index {i} out of range for {n} subjects")
    phi = jupp_inverse(state.eta[i], kv_w.domain_lo, kv_w.domain_hi)
    h1, h2 = warped_times(phi, times, kv_w, state.rho)
    f1 = spline_values(kv_s, state.gamma1, h1)
    f2 = spline_values(kv_s, state.gamma2, h2)
    return state.c[i] + state.pi[i] * f1 + (1.0 - state.pi[i]) * f2


def fitted_means(state: ModelState, data: Dataset, kv_s: KnotVector, kv_w: KnotVector) -> np.ndarray:
    """Mean of every observation, flattened in dataset order."""
    phi = warp_coefficients(state, kv_w)
    Bw = design_matrix(kv_w, data.t_flat)
    s = data.subject_index
    h1 = np.einsum("mq,mq->m", Bw, phi[s])
    h2 = state.rho * (h1 - data.t_flat) + data.t_flat
    f1 = spline_values(kv_s, state.gamma1, h1)
    f2 = spline_values(kv_s, state.gamma2, h2)
    pi = state.pi[s]
    return state.c[s] + pi * f1 + (1.0 - pi) * f2


def gaussian_loglik(resid: np.ndarray, sigma2: float) -> float:
    if not sigma2 > 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    return -0.5 * (resid.size * np.log(2 * np.pi * sigma2) + resid @ resid / sigma2)


def log_likelihood(state: ModelState, data: Dataset, kv_s: KnotVector, kv_w: KnotVector) -> float:
    """Gaussian log-likelihood of all observations."""
    if not state.sigma2_eps > 0:
        raise ValueError(f"noise variance must be positive, got {state.sigma2_eps}")
    resid = data.y_flat - fitted_means(state, data, kv_s, kv_w)
    return gaussian_loglik(resid, state.sigma2_eps)


def penalty_matrix(K: int) -> np.ndarray:
    """First-order random-walk precision: tridiagonal, last diagonal entry 1.

    ``g' Omega g = g_1^2 + sum_k (g_k - g_{k-1})^2``, so it is positive
    definite for every ``K >= 2``.
    """
    if K < 2:
        raise ValueError(f"penalty needs K >= 2, got {K}")
    omega = 2.0 * np.eye(K) - np.eye(K, k=1) - np.eye(K, k=-1)
    omega[-1, -1] = 1.0
    return omega


def gamma_prior_covariance(lambda1: float, lambda2: float, omega: np.ndarray) -> np.ndarray:
    """Block-diagonal prior covariance of the stacked shape coefficients."""
    if not (lambda1 > 0 and lambda2 > 0):
        raise ValueError("shape variances must be positive")
    cf = cho_factor(omega)
    omega_inv = cho_solve(cf, np.eye(omega.shape[0]))
    return block_diag(lambda1 * omega_inv, lambda2 * omega_inv)


def membership_rescale(pi) -> np.ndarray:
    """Affine map sending the smallest membership to 0 and the largest to 1."""
    pi = np.asarray(pi, dtype=float)
    lo, hi = pi.min(), pi.max()
    if not hi > lo:
        raise DegenerateMembershipError("memberships are constant; cannot rescale")
    return (pi - lo) / (hi - lo)


def one_sided_labels(labels: Sequence[int]) -> bool:
    """True when exactly one of the two features has labelled subjects."""
    labels = np.asarray(labels)
    return np.any(labels == FEATURE1) != np.any(labels == FEATURE2)


def apply_identifiability(
    state: ModelState,
    labels,
    identity_target,
    preserve_fit: bool = False,
) -> ModelState:
    """Project a state onto the constrained parameter space.

    Enforces ``sum(c) = 0``, ``sum(gamma1) = 0``, centres the Jupp-space
    warps on ``identity_target`` and, when only one feature carries labels,
    min/max rescales the memberships.

    With ``preserve_fit=True`` the two level constraints are met by shifting
    both shape levels and compensating every intercept, which leaves each
    fitted mean unchanged (the likelihood is invariant under that move).
    Otherwise intercepts and ``gamma1`` are simply mean-centred.
    """
    out = state.copy()
    labels = np.asarray(labels)
    if one_sided_labels(labels):
        try:
            out.pi = membership_rescale(out.pi)
        except DegenerateMembershipError:
            warnings.warn("constant memberships, skipping rescale", RuntimeWarning, stacklevel=2)
        out.pi[labels == FEATURE1] = 1.0
        out.pi[labels == FEATURE2] = 0.0

    weight2 = np.sum(1.0 - out.pi)
    if preserve_fit and weight2 > 0:
        u = -out.gamma1.mean()
        out.gamma1 = out.gamma1 + u
        v = (out.c.sum() - u * out.pi.sum()) / weight2
        out.gamma2 = out.gamma2 + v
        out.c = out.c - out.pi * u - (1.0 - out.pi) * v
        # remove rounding residue
        out.c -= out.c.mean()
    else:
        out.c = out.c - out.c.mean()
        out.gamma1 = out.gamma1 - out.gamma1.mean()
    out.eta = center_etas(out.eta, identity_target)
    return out
