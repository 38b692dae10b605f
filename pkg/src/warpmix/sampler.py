"""Metropolis-within-Gibbs sampler for the warped mixed-membership model.

One sweep updates, in order: shape coefficients, intercepts, memberships,
Jupp-space warps (with proposal-scale adaptation during burn-in), the
feature-2 warp scale ``rho``, the phase regression matrix, the variance
components, and finally projects onto the identifiability constraints.

Per-subject Metropolis steps (memberships, warps) are conditionally
independent given the population parameters, so all subjects are proposed
and accepted in one vectorised pass.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.special import betaln, gammaln, log_ndtr

from . import _kernels
from .basis import KnotVector, design_matrix, greville_abscissae, make_knots
from .model import (
    FEATURE1,
    FEATURE2,
    FREE,
    DataError,
    Dataset,
    Hyperparameters,
    ModelState,
    apply_identifiability,
    penalty_matrix,
)
from .warp import jupp, jupp_inverse

log = logging.getLogger(__name__)

RHO_PROPOSAL_SD = 0.01
PI_FLOOR = 1e-9
INIT_SWEEPS = 25
INIT_PI_MARGIN = 0.02


class NumericalError(RuntimeError):
    """The chain produced a non-finite quantity or a singular system."""


@dataclass
class ChainConfig:
    n_iter: int = 15_000
    n_burnin: int = 10_000
    seed: int = 0
    thin: int = 1
    initial_tau: float = 0.01
    rho_mode: str = "sampled"
    rho_value: float = 1.0
    regression_enabled: bool = False
    n_interior_shape: int = 15
    n_interior_warp: int = 1
    identifiability: bool = True

    def __post_init__(self):
        if not 0 <= self.n_burnin < self.n_iter:
            raise ValueError("need 0 <= n_burnin < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.rho_mode not in ("sampled", "fixed"):
            raise ValueError("rho_mode must be 'sampled' or 'fixed'")
        if self.rho_value < 0:
            raise ValueError("rho_value must be non-negative")
        if not self.initial_tau > 0:
            raise ValueError("initial_tau must be positive")


@dataclass
class ChainOutput:
    """Retained draws stored block-wise (first axis indexes draws)."""

    c: np.ndarray
    pi: np.ndarray
    eta: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    rho: np.ndarray
    B: np.ndarray
    sigma2_eps: np.ndarray
    sigma2_c: np.ndarray
    sigma2_eta: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    loglik: np.ndarray
    accept_eta: np.ndarray
    accept_pi: np.ndarray
    accept_rho: float
    tau: np.ndarray
    kv_s: KnotVector
    kv_w: KnotVector
    identity_target: np.ndarray
    clamp_count: int = 0
    meta: dict = field(default_factory=dict)

    SCALARS = ("rho", "sigma2_eps", "sigma2_c", "sigma2_eta", "lambda1", "lambda2")

    def __len__(self) -> int:
        return len(self.loglik)

    def draw(self, j: int) -> ModelState:
        return ModelState(
            c=self.c[j].copy(),
            pi=self.pi[j].copy(),
            eta=self.eta[j].copy(),
            gamma1=self.gamma1[j].copy(),
            gamma2=self.gamma2[j].copy(),
            B=self.B[j].copy(),
            **{k: float(getattr(self, k)[j]) for k in self.SCALARS},
        )

    def states(self):
        for j in range(len(self)):
            yield self.draw(j)

    def phi(self) -> np.ndarray:
        """J x N x Q warp coefficients of every draw."""
        return jupp_inverse(self.eta, self.kv_w.domain_lo, self.kv_w.domain_hi)


def adapt_tau(tau, rate, target: float, iteration: int):
    """Multiplicative proposal-scale update towards a target acceptance rate."""
    return tau * (1.0 + (np.asarray(rate) - target) / np.sqrt(iteration))


def _inv_gamma(rng, shape, rate):
    return rate / rng.gamma(shape)


class ChainContext:
    """Fixed quantities of one chain plus a cache of warped evaluations.

    The cache (``h1``, ``h2``, local basis values, ``f1``, ``f2``) always
    describes the state most recently passed to :meth:`refresh`, and the
    update methods keep it consistent with the states they return.
    """

    def __init__(self, data: Dataset, hp: Hyperparameters, cfg: ChainConfig):
        self.data = data
        self.hp = hp
        self.cfg = cfg
        lo = float(data.t_flat.min())
        hi = float(data.t_flat.max())
        self.kv_s = make_knots(lo, hi, cfg.n_interior_shape)
        self.kv_w = make_knots(lo, hi, cfg.n_interior_warp)
        data.validate_for(self.kv_w)
        self.K = self.kv_s.dimension
        self.Qs = self.kv_w.dimension - 2
        self.omega = penalty_matrix(self.K)
        self.identity_target = jupp(greville_abscissae(self.kv_w))
        self.Bw = design_matrix(self.kv_w, data.t_flat)
        self.s = data.subject_index
        self.t = data.t_flat
        self.y = data.y_flat
        self.n_obs = data.n_obs
        self.N = data.n_subjects
        self.labels = data.labels
        self.free = data.labels == FREE
        self.clamp_count = 0

        if cfg.regression_enabled:
            X = data.covariates
            if X.shape[1] == 0:
                raise DataError("regression enabled but no covariates supplied")
            if np.linalg.matrix_rank(X) < X.shape[1]:
                raise DataError("covariate design matrix is rank deficient")
            self.X = X
            self.g = float(hp.g) if hp.g is not None else float(self.N)
            self.XtX = X.T @ X
            self.XtX_cf = cho_factor(self.XtX)
        else:
            self.X = np.zeros((self.N, 0))
            self.g = float(hp.g) if hp.g is not None else float(self.N)

    # ------------------------------------------------------------------
    # cache
    # ------------------------------------------------------------------
    def set_values(self, y_flat: np.ndarray) -> None:
        """Swap in new observations on the same design (used by joint tests)."""
        self.y = np.asarray(y_flat, dtype=float)

    def _local(self, h):
        kv = self.kv_s
        return _kernels.local_basis(
            kv.full_sequence, h, kv.degree, kv.dimension, kv.domain_lo, kv.domain_hi
        )

    def _spline(self, first, vals, coef):
        return _kernels.spline_eval(first, vals, coef)

    def _warp_h1(self, eta):
        phi = jupp_inverse(eta, self.kv_w.domain_lo, self.kv_w.domain_hi)
        return _kernels.warp_eval(self.Bw, phi, self.s)

    def refresh(self, state: ModelState) -> None:
        h1 = self._warp_h1(state.eta)
        h2 = state.rho * (h1 - self.t) + self.t
        self.first1, self.vals1, _ = self._local(h1)
        self.first2, self.vals2, n_out = self._local(h2)
        self.clamp_count += n_out
        self.h1, self.h2 = h1, h2
        self.f1 = self._spline(self.first1, self.vals1, state.gamma1)
        self.f2 = self._spline(self.first2, self.vals2, state.gamma2)

    def means(self, state: ModelState) -> np.ndarray:
        pi = state.pi[self.s]
        return state.c[self.s] + pi * self.f1 + (1.0 - pi) * self.f2

    def loglik(self, state: ModelState) -> float:
        r = self.y - self.means(state)
        return -0.5 * (r.size * np.log(2 * np.pi * state.sigma2_eps) + r @ r / state.sigma2_eps)

    def _subject_sse(self, resid):
        return _kernels.group_sse(self.s, resid, self.N)

    # ------------------------------------------------------------------
    # initialisation
    # ------------------------------------------------------------------
    def initial_state(self) -> ModelState:
        N, K, Qs = self.N, self.K, self.Qs
        pi = np.full(N, 0.5)
        pi[self.labels == FEATURE1] = 1.0
        pi[self.labels == FEATURE2] = 0.0
        eta = np.tile(self.identity_target, (N, 1))
        l = self.X.shape[1]
        rho = self.cfg.rho_value
        hp = self.hp
        state = ModelState(
            c=np.zeros(N), pi=pi, eta=eta, gamma1=np.zeros(K), gamma2=np.zeros(K),
            rho=rho, B=np.zeros((l, Qs)), sigma2_eps=1.0,
            sigma2_c=_ig_center(hp.a_c, hp.b_c), sigma2_eta=_ig_center(hp.a_eta, hp.b_eta),
            lambda1=1.0, lambda2=1.0,
        )
        self.refresh(state)
        # warp-free alternating least squares for (gamma, c, pi)
        for _ in range(INIT_SWEEPS):
            W = self._weighted_design(state)
            G = W.T @ W
            ridge = 1e-3 * np.trace(G) / (2 * K)
            coef = np.linalg.solve(G + ridge * np.eye(2 * K), W.T @ (self.y - state.c[self.s]))
            state.gamma1, state.gamma2 = coef[:K].copy(), coef[K:].copy()
            self.refresh(state)
            state.c, pi_ls = self._subject_level_and_membership(state)
            state.pi = np.where(self.free, np.clip(pi_ls, INIT_PI_MARGIN, 1 - INIT_PI_MARGIN), state.pi)
        resid = self.y - self.means(state)
        state.sigma2_eps = max(float(resid @ resid) / resid.size, 1e-8)
        state.sigma2_c = max(float(state.c @ state.c) / N, 1e-8)
        state.lambda1 = max(float(state.gamma1 @ self.omega @ state.gamma1) / K, 1e-6)
        state.lambda2 = max(float(state.gamma2 @ self.omega @ state.gamma2) / K, 1e-6)
        if self.cfg.identifiability:
            # no membership rescale here: constant free memberships would all collapse to 0
            no_labels = np.full(N, FREE)
            state = apply_identifiability(state, no_labels, self.identity_target, preserve_fit=True)
        self.refresh(state)
        return state

    def _subject_level_and_membership(self, state: ModelState):
        """Per-subject least squares of ``y - f2`` on ``[1, f1 - f2]``."""
        d = self.f1 - self.f2
        r = self.y - self.f2
        g = _kernels.group_sum
        n = self.n_obs.astype(float)
        sd, sdd = g(self.s, d, self.N), g(self.s, d * d, self.N)
        sr, sdr = g(self.s, r, self.N), g(self.s, d * r, self.N)
        det = n * sdd - sd * sd
        ok = det > 1e-12 * np.maximum(n * sdd, 1.0)
        pi = np.where(ok, (n * sdr - sd * sr) / np.where(ok, det, 1.0), 0.5)
        pi = np.where(self.free, np.clip(pi, 0.0, 1.0), state.pi)
        c = (sr - pi * sd) / n
        return c, pi

    # ------------------------------------------------------------------
    # Gibbs steps
    # ------------------------------------------------------------------
    def _weighted_design(self, state: ModelState) -> np.ndarray:
        M, K = self.y.size, self.K
        pi = state.pi[self.s]
        W = np.zeros((M, 2 * K))
        rows = np.arange(M)[:, None]
        cols = np.arange(4)
        W[rows, self.first1[:, None] + cols] = pi[:, None] * self.vals1
        W[rows, K + self.first2[:, None] + cols] = (1.0 - pi)[:, None] * self.vals2
        return W

    def gamma_conditional(self, state: ModelState):
        """Mean and Cholesky factor of the precision of the stacked shapes."""
        pi = state.pi[self.s]
        WtW, Wtr = _kernels.weighted_gram(
            self.first1, self.vals1, self.first2, self.vals2,
            pi, 1.0 - pi, self.y - state.c[self.s], self.K,
        )
        prior_prec = np.zeros((2 * self.K, 2 * self.K))
        prior_prec[: self.K, : self.K] = self.omega / state.lambda1
        prior_prec[self.K:, self.K:] = self.omega / state.lambda2
        prec = WtW / state.sigma2_eps + prior_prec
        rhs = Wtr / state.sigma2_eps
        try:
            L = np.linalg.cholesky(prec)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"shape posterior precision not positive definite (cond={np.linalg.cond(prec):.3g})"
            ) from exc
        mean = cho_solve((L, True), rhs)
        return mean, L

    def gibbs_update_gamma(self, state: ModelState, rng) -> ModelState:
        mean, L = self.gamma_conditional(state)
        z = rng.standard_normal(2 * self.K)
        g = mean + solve_triangular(L.T, z, lower=False)
        if self.cfg.identifiability:
            # condition the Gaussian draw on sum(gamma1) = 0
            a = np.zeros(2 * self.K)
            a[: self.K] = 1.0
            Pa = cho_solve((L, True), a)
            g = g - Pa * (a @ g) / (a @ Pa)
        out = state.copy()
        out.gamma1, out.gamma2 = g[: self.K].copy(), g[self.K:].copy()
        self.f1 = self._spline(self.first1, self.vals1, out.gamma1)
        self.f2 = self._spline(self.first2, self.vals2, out.gamma2)
        return out

    def intercept_conditional(self, state: ModelState):
        """Per-subject Normal conditional (mean, variance) of the intercepts."""
        pi = state.pi[self.s]
        resid = self.y - (pi * self.f1 + (1.0 - pi) * self.f2)
        rsum = _kernels.group_sum(self.s, resid, self.N)
        prec = self.n_obs / state.sigma2_eps + 1.0 / state.sigma2_c
        return rsum / state.sigma2_eps / prec, 1.0 / prec

    def gibbs_update_intercepts(self, state: ModelState, rng) -> ModelState:
        mean, var = self.intercept_conditional(state)
        out = state.copy()
        out.c = mean + np.sqrt(var) * rng.standard_normal(self.N)
        return out

    def eta_prior_mean(self, state: ModelState) -> np.ndarray:
        return self.identity_target + self.X @ state.B

    def B_conditional(self, state: ModelState):
        """Posterior mean and row covariance of the phase regression matrix.

        Column covariance is ``sigma2_eta * I``.
        """
        E = state.eta - self.identity_target
        shrink = self.g / (self.g + 1.0)
        mean = shrink * cho_solve(self.XtX_cf, self.X.T @ E)
        rowcov = shrink * cho_solve(self.XtX_cf, np.eye(self.X.shape[1]))
        return mean, rowcov

    def gibbs_update_B(self, state: ModelState, rng) -> ModelState:
        if not self.cfg.regression_enabled:
            return state
        mean, rowcov = self.B_conditional(state)
        L = np.linalg.cholesky(rowcov)
        Z = rng.standard_normal(mean.shape)
        out = state.copy()
        out.B = mean + np.sqrt(state.sigma2_eta) * (L @ Z)
        return out

    def variance_conditionals(self, state: ModelState) -> dict:
        """Inverse-Gamma (shape, rate) of every variance component."""
        hp = self.hp
        resid = self.y - self.means(state)
        e = state.eta - self.eta_prior_mean(state)
        sh_eta = hp.a_eta + e.size / 2.0
        rt_eta = hp.b_eta + 0.5 * float(np.sum(e * e))
        if self.cfg.regression_enabled:
            sh_eta += state.B.size / 2.0
            rt_eta += 0.5 * float(np.sum(state.B * (self.XtX @ state.B))) / self.g
        return {
            "sigma2_eps": (hp.a_eps + resid.size / 2.0, hp.b_eps + 0.5 * float(resid @ resid)),
            "sigma2_c": (hp.a_c + self.N / 2.0, hp.b_c + 0.5 * float(state.c @ state.c)),
            "lambda1": (hp.a_lambda + self.K / 2.0,
                        hp.b_lambda + 0.5 * float(state.gamma1 @ self.omega @ state.gamma1)),
            "lambda2": (hp.a_lambda + self.K / 2.0,
                        hp.b_lambda + 0.5 * float(state.gamma2 @ self.omega @ state.gamma2)),
            "sigma2_eta": (sh_eta, rt_eta),
        }

    def gibbs_update_variances(self, state: ModelState, rng) -> ModelState:
        out = state.copy()
        for name, (shape, rate) in self.variance_conditionals(state).items():
            setattr(out, name, float(_inv_gamma(rng, shape, rate)))
        return out

    # ------------------------------------------------------------------
    # Metropolis steps
    # ------------------------------------------------------------------
    def _pi_floor(self) -> float:
        return max(PI_FLOOR, 1.0 / self.hp.dirichlet_scale)

    def membership_log_ratio(self, state: ModelState, pi_new: np.ndarray) -> np.ndarray:
        """Per-subject log acceptance ratio for proposed memberships.

        The proposal is ``Beta(a c(pi), a (1 - c(pi)))`` with centre
        ``c(pi) = clip(pi, eps, 1 - eps)``, which keeps it proper near the
        boundary.
        """
        a = self.hp.dirichlet_scale
        alpha = self.hp.alpha
        eps = self._pi_floor()
        pi_old = state.pi
        c_old = np.clip(pi_old, eps, 1.0 - eps)
        c_new = np.clip(pi_new, eps, 1.0 - eps)
        base = self.y - state.c[self.s] - self.f2
        diff = self.f1 - self.f2
        sse_old = self._subject_sse(base - pi_old[self.s] * diff)
        sse_new = self._subject_sse(base - pi_new[self.s] * diff)
        loglik = -0.5 * (sse_new - sse_old) / state.sigma2_eps
        with np.errstate(divide="ignore", invalid="ignore"):
            prior = (alpha - 1.0) * (np.log(pi_new) + np.log1p(-pi_new)
                                     - np.log(pi_old) - np.log1p(-pi_old))
            hastings = (_beta_logpdf(pi_old, a * c_new, a * (1.0 - c_new))
                        - _beta_logpdf(pi_new, a * c_old, a * (1.0 - c_old)))
            out = loglik + prior + hastings
        bad = ~((pi_new > 0) & (pi_new < 1)) | ~np.isfinite(out)
        out[bad] = -np.inf
        return out

    def mh_update_membership(self, state: ModelState, rng):
        a = self.hp.dirichlet_scale
        eps = self._pi_floor()
        current = state.copy()
        # the prior density is unbounded at 0 and 1, so a free subject left
        # exactly there by the rescale is nudged inside first
        edge = self.free & ((state.pi <= 0.0) | (state.pi >= 1.0))
        current.pi = np.where(edge, np.clip(state.pi, eps, 1.0 - eps), state.pi)
        centre = np.clip(current.pi, eps, 1.0 - eps)
        prop = rng.beta(a * centre, a * (1.0 - centre))
        u = rng.random(self.N)
        logr = self.membership_log_ratio(current, prop)
        accept = self.free & (np.log(u) < logr)
        current.pi = np.where(accept, prop, current.pi)
        return current, accept

    def mh_update_eta(self, state: ModelState, rng, tau: np.ndarray):
        N, Qs = self.N, self.Qs
        prop = state.eta + np.sqrt(tau)[:, None] * rng.standard_normal((N, Qs))
        u = rng.random(N)
        h1 = self._warp_h1(prop)
        h2 = state.rho * (h1 - self.t) + self.t
        first1, vals1, _ = self._local(h1)
        first2, vals2, n_out = self._local(h2)
        f1 = self._spline(first1, vals1, state.gamma1)
        f2 = self._spline(first2, vals2, state.gamma2)
        pi = state.pi[self.s]
        base = self.y - state.c[self.s]
        sse_new = self._subject_sse(base - pi * f1 - (1.0 - pi) * f2)
        sse_old = self._subject_sse(base - pi * self.f1 - (1.0 - pi) * self.f2)
        mu = self.eta_prior_mean(state)
        prior_new = -0.5 * np.sum((prop - mu) ** 2, axis=1) / state.sigma2_eta
        prior_old = -0.5 * np.sum((state.eta - mu) ** 2, axis=1) / state.sigma2_eta
        logr = -0.5 * (sse_new - sse_old) / state.sigma2_eps + prior_new - prior_old
        accept = np.log(u) < logr
        out = state.copy()
        out.eta = np.where(accept[:, None], prop, state.eta)
        m = accept[self.s]
        self.h1 = np.where(m, h1, self.h1)
        self.h2 = np.where(m, h2, self.h2)
        self.first1 = np.where(m, first1, self.first1)
        self.first2 = np.where(m, first2, self.first2)
        self.vals1 = np.where(m[:, None], vals1, self.vals1)
        self.vals2 = np.where(m[:, None], vals2, self.vals2)
        self.f1 = np.where(m, f1, self.f1)
        self.f2 = np.where(m, f2, self.f2)
        return out, accept

    def rho_log_ratio(self, state: ModelState, rho_new: float, f2_new: np.ndarray) -> float:
        pi = state.pi[self.s]
        base = self.y - state.c[self.s] - pi * self.f1
        r_old = base - (1.0 - pi) * self.f2
        r_new = base - (1.0 - pi) * f2_new
        loglik = -0.5 * (r_new @ r_new - r_old @ r_old) / state.sigma2_eps
        a, b = self.hp.a_rho, self.hp.b_rho
        prior = _gamma_logpdf(rho_new, a, b) - _gamma_logpdf(state.rho, a, b)
        return loglik + prior + rho_truncation_correction(state.rho, rho_new)

    def mh_update_rho(self, state: ModelState, rng):
        if self.cfg.rho_mode == "fixed":
            return state, False
        rho_new = _truncnorm_draw(rng, state.rho, RHO_PROPOSAL_SD)
        u = rng.random()
        h2 = rho_new * (self.h1 - self.t) + self.t
        first2, vals2, n_out = self._local(h2)
        f2 = self._spline(first2, vals2, state.gamma2)
        if np.log(u) < self.rho_log_ratio(state, rho_new, f2):
            self.clamp_count += n_out
            self.h2, self.first2, self.vals2, self.f2 = h2, first2, vals2, f2
            out = state.copy()
            out.rho = float(rho_new)
            return out, True
        return state, False

    # ------------------------------------------------------------------
    def sweep(self, state: ModelState, rng, tau: np.ndarray):
        """One full sweep; returns (state, eta_accept, pi_accept, rho_accept)."""
        state = self.gibbs_update_gamma(state, rng)
        state = self.gibbs_update_intercepts(state, rng)
        state, acc_pi = self.mh_update_membership(state, rng)
        state, acc_eta = self.mh_update_eta(state, rng, tau)
        state, acc_rho = self.mh_update_rho(state, rng)
        state = self.gibbs_update_B(state, rng)
        state = self.gibbs_update_variances(state, rng)
        if self.cfg.identifiability:
            state = apply_identifiability(state, self.labels, self.identity_target, preserve_fit=True)
            self.refresh(state)
        return state, acc_eta, acc_pi, acc_rho


def rho_truncation_correction(rho_old: float, rho_new: float, sd: float = RHO_PROPOSAL_SD) -> float:
    """log q(old|new) - log q(new|old) for a zero-truncated Normal random walk."""
    return float(log_ndtr(rho_old / sd) - log_ndtr(rho_new / sd))


def _truncnorm_draw(rng, loc: float, sd: float) -> float:
    while True:
        x = loc + sd * rng.standard_normal()
        if x >= 0:
            return x


def _beta_logpdf(x, a, b):
    return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - betaln(a, b)


def _gamma_logpdf(x, shape, rate):
    if x < 0:
        return -np.inf
    if x == 0:
        return 0.0 if shape == 1 else (-np.inf if shape > 1 else np.inf)
    return shape * np.log(rate) - gammaln(shape) + (shape - 1.0) * np.log(x) - rate * x


def _ig_center(a, b):
    """Prior mean of an Inverse-Gamma when it exists, otherwise its mode."""
    return b / (a - 1.0) if a > 1 else b / (a + 1.0)


def run_chain(
    data: Dataset,
    hp: Optional[Hyperparameters] = None,
    cfg: Optional[ChainConfig] = None,
    initial_state: Optional[ModelState] = None,
) -> ChainOutput:
    """Run one chain and return the thinned post-burn-in draws."""
    hp = hp or Hyperparameters()
    cfg = cfg or ChainConfig()
    ctx = ChainContext(data, hp, cfg)
    rng = np.random.default_rng(cfg.seed)
    if initial_state is None:
        state = ctx.initial_state()
    else:
        state = initial_state.copy()
        ctx.refresh(state)
    ctx.clamp_count = 0

    N, K, Qs, l = ctx.N, ctx.K, ctx.Qs, state.B.shape[0]
    J = len(range(cfg.n_burnin, cfg.n_iter, cfg.thin))
    out = {
        "c": np.empty((J, N)), "pi": np.empty((J, N)), "eta": np.empty((J, N, Qs)),
        "gamma1": np.empty((J, K)), "gamma2": np.empty((J, K)), "B": np.empty((J, l, Qs)),
        "loglik": np.empty(J),
    }
    for k in ChainOutput.SCALARS:
        out[k] = np.empty(J)

    tau = np.full(N, cfg.initial_tau)
    n_acc_eta = np.zeros(N)
    n_acc_pi = np.zeros(N)
    n_acc_rho = 0
    post_eta = np.zeros(N)
    post_pi = np.zeros(N)
    post_rho = 0
    j = 0
    for it in range(1, cfg.n_iter + 1):
        state, acc_eta, acc_pi, acc_rho = ctx.sweep(state, rng, tau)
        n_acc_eta += acc_eta
        n_acc_pi += acc_pi
        n_acc_rho += acc_rho
        if it <= cfg.n_burnin:
            tau = adapt_tau(tau, n_acc_eta / it, hp.target_accept, it)
        else:
            post_eta += acc_eta
            post_pi += acc_pi
            post_rho += acc_rho
            if (it - cfg.n_burnin - 1) % cfg.thin == 0:
                ll = ctx.loglik(state)
                if not np.isfinite(ll):
                    raise NumericalError(f"non-finite log-likelihood at iteration {it}")
                for k in ("c", "pi", "eta", "gamma1", "gamma2", "B"):
                    out[k][j] = getattr(state, k)
                for k in ChainOutput.SCALARS:
                    out[k][j] = getattr(state, k)
                out["loglik"][j] = ll
                j += 1
        if it % 5000 == 0:
            log.debug("iteration %d, rho=%.3f, sigma2_eps=%.3g", it, state.rho, state.sigma2_eps)

    n_post = cfg.n_iter - cfg.n_burnin
    free = ctx.free
    accept_pi = np.where(free, post_pi / n_post, np.nan)
    return ChainOutput(
        **out,
        accept_eta=post_eta / n_post,
        accept_pi=accept_pi,
        accept_rho=post_rho / n_post if cfg.rho_mode == "sampled" else float("nan"),
        tau=tau,
        kv_s=ctx.kv_s,
        kv_w=ctx.kv_w,
        identity_target=ctx.identity_target,
        clamp_count=ctx.clamp_count,
        meta={"seed": cfg.seed, "n_iter": cfg.n_iter, "n_burnin": cfg.n_burnin, "thin": cfg.thin},
    )
