"""Sampler correctness.

Each conjugate conditional is compared on a grid with a brute-force joint
density written independently from scipy distributions; Metropolis ratios
are compared with direct density evaluations; and a reduced model is run
through the successive-conditional simulator, whose stationary law is the
prior.
"""

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import beta, dirichlet, gamma, invgamma, multivariate_normal, norm, truncnorm

from warpmix.model import FEATURE1, FREE, Dataset, Hyperparameters, ModelState, log_likelihood
from warpmix.sampler import (
    RHO_PROPOSAL_SD,
    ChainConfig,
    ChainContext,
    adapt_tau,
    rho_truncation_correction,
    run_chain,
)
from warpmix.simgen import SimConfig, simulate_dataset

HP = Hyperparameters(a_eps=2.0, b_eps=0.01, a_c=2.0, b_c=0.1, a_lambda=2.0, b_lambda=1.0,
                     a_eta=3.0, b_eta=1.0, a_rho=2.0, b_rho=3.0, g=7.0)


def _setup(regression=False, seed=0):
    data, truth = simulate_dataset(SimConfig(N=8, n=15, seed=seed, n_labels=1))
    rng = np.random.default_rng(seed + 100)
    X = rng.normal(size=(8, 2)) if regression else None
    data = Dataset(data.times, data.values, covariates=X, labels=np.full(8, FREE))
    cfg = ChainConfig(n_iter=10, n_burnin=5, regression_enabled=regression)
    ctx = ChainContext(data, HP, cfg)
    state = ModelState(
        c=truth.c + 0.05 * rng.normal(size=8), pi=np.clip(truth.pi, 0.05, 0.95),
        eta=truth.eta + 0.2 * rng.normal(size=truth.eta.shape),
        gamma1=truth.gamma1 + 0.05 * rng.normal(size=ctx.K), gamma2=truth.gamma2.copy(),
        rho=0.5, B=0.3 * rng.normal(size=(X.shape[1] if regression else 0, 3)),
        sigma2_eps=0.01, sigma2_c=0.05, sigma2_eta=0.7, lambda1=0.8, lambda2=1.3,
    )
    ctx.refresh(state)
    return data, ctx, state


def log_joint(state, data, ctx):
    """Unnormalised log posterior assembled from scipy densities."""
    hp = ctx.hp
    lp = log_likelihood(state, data, ctx.kv_s, ctx.kv_w)
    lp += norm.logpdf(state.c, 0, np.sqrt(state.sigma2_c)).sum()
    om_inv = np.linalg.inv(ctx.omega)
    lp += multivariate_normal.logpdf(state.gamma1, np.zeros(ctx.K), state.lambda1 * om_inv)
    lp += multivariate_normal.logpdf(state.gamma2, np.zeros(ctx.K), state.lambda2 * om_inv)
    free = data.labels == FREE
    lp += beta.logpdf(state.pi[free], hp.alpha, hp.alpha).sum()
    mu = ctx.identity_target + data.covariates @ state.B
    lp += norm.logpdf(state.eta, mu, np.sqrt(state.sigma2_eta)).sum()
    if ctx.cfg.regression_enabled:
        X = data.covariates
        cov = ctx.g * state.sigma2_eta * np.linalg.inv(X.T @ X)
        for q in range(state.B.shape[1]):
            lp += multivariate_normal.logpdf(state.B[:, q], np.zeros(X.shape[1]), cov)
    lp += gamma.logpdf(state.rho, hp.a_rho, scale=1 / hp.b_rho)
    for name, a, b in (("sigma2_eps", hp.a_eps, hp.b_eps), ("sigma2_c", hp.a_c, hp.b_c),
                       ("lambda1", hp.a_lambda, hp.b_lambda), ("lambda2", hp.a_lambda, hp.b_lambda),
                       ("sigma2_eta", hp.a_eta, hp.b_eta)):
        lp += invgamma.logpdf(getattr(state, name), a, scale=b)
    return lp


def max_rel_error(log_a, log_b):
    """Largest relative gap between two grid densities after normalising each."""
    log_a, log_b = np.asarray(log_a), np.asarray(log_b)
    d = (log_a - logsumexp(log_a)) - (log_b - logsumexp(log_b))
    return float(np.max(np.abs(np.expm1(d))))


def _grid(mean, sd, n=41):
    return mean + sd * np.linspace(-4, 4, n)


class TestGridProportionality:
    def test_intercepts(self):
        data, ctx, state = _setup()
        mean, var = ctx.intercept_conditional(state)
        for i in (0, 5):
            xs = _grid(mean[i], np.sqrt(var[i]))
            joint, cond = [], []
            for x in xs:
                s = state.copy()
                s.c[i] = x
                joint.append(log_joint(s, data, ctx))
                cond.append(norm.logpdf(x, mean[i], np.sqrt(var[i])))
            assert max_rel_error(joint, cond) < 1e-6

    @pytest.mark.parametrize("coord", [0, 7, 18, 19, 30, 37])
    def test_shape_coefficients(self, coord):
        data, ctx, state = _setup()
        mean, L = ctx.gamma_conditional(state)
        prec = L @ L.T
        g0 = state.gamma.copy()
        # one-dimensional conditional of the Gaussian along this coordinate
        p = prec[coord, coord]
        m = mean[coord] - (prec[coord] @ (g0 - mean) - p * (g0[coord] - mean[coord])) / p
        xs = _grid(m, 1 / np.sqrt(p))
        joint, cond = [], []
        K = ctx.K
        for x in xs:
            g = g0.copy()
            g[coord] = x
            s = state.copy()
            s.gamma1, s.gamma2 = g[:K], g[K:]
            joint.append(log_joint(s, data, ctx))
            cond.append(norm.logpdf(x, m, 1 / np.sqrt(p)))
        assert max_rel_error(joint, cond) < 1e-6

    def test_shape_coefficients_random_direction(self):
        data, ctx, state = _setup(seed=3)
        mean, L = ctx.gamma_conditional(state)
        prec = L @ L.T
        u = np.random.default_rng(1).normal(size=2 * ctx.K)
        u /= np.linalg.norm(u)
        g0 = state.gamma
        # g0 + s u restricted Gaussian: precision u'Pu, mean from the linear term
        pu = u @ prec @ u
        m = -(u @ prec @ (g0 - mean)) / pu
        xs = _grid(m, 1 / np.sqrt(pu))
        joint = []
        for x in xs:
            g = g0 + x * u
            s = state.copy()
            s.gamma1, s.gamma2 = g[: ctx.K], g[ctx.K:]
            joint.append(log_joint(s, data, ctx))
        cond = norm.logpdf(xs, m, 1 / np.sqrt(pu))
        assert max_rel_error(joint, cond) < 1e-6

    @pytest.mark.parametrize("regression", [False, True])
    @pytest.mark.parametrize("name", ["sigma2_eps", "sigma2_c", "lambda1", "lambda2", "sigma2_eta"])
    def test_variances(self, name, regression):
        data, ctx, state = _setup(regression=regression)
        shape, rate = ctx.variance_conditionals(state)[name]
        dist = invgamma(shape, scale=rate)
        xs = np.linspace(dist.ppf(1e-4), dist.ppf(1 - 1e-4), 61)
        joint = []
        for x in xs:
            s = state.copy()
            setattr(s, name, float(x))
            joint.append(log_joint(s, data, ctx))
        assert max_rel_error(joint, dist.logpdf(xs)) < 1e-6

    @pytest.mark.parametrize("entry", [(0, 0), (1, 2)])
    def test_phase_regression(self, entry):
        data, ctx, state = _setup(regression=True)
        mean, rowcov = ctx.B_conditional(state)
        r, q = entry
        P = np.linalg.inv(state.sigma2_eta * rowcov)
        b = state.B[:, q]
        m = mean[r, q] - (P[r] @ (b - mean[:, q]) - P[r, r] * (b[r] - mean[r, q])) / P[r, r]
        xs = _grid(m, 1 / np.sqrt(P[r, r]))
        joint = []
        for x in xs:
            s = state.copy()
            s.B[r, q] = x
            joint.append(log_joint(s, data, ctx))
        assert max_rel_error(joint, norm.logpdf(xs, m, 1 / np.sqrt(P[r, r]))) < 1e-6

    def test_scalar_g_prior_closed_form(self):
        # one covariate, one warp coordinate: posterior mean g/(g+1) * OLS
        x = np.array([1.0, -2.0, 0.5, 1.5])
        e = np.array([0.3, -0.1, 0.2, 0.4])
        g = 4.0
        ols = (x @ e) / (x @ x)
        data, ctx, _ = _setup(regression=True)
        ctx.X = x[:, None]
        ctx.XtX = ctx.X.T @ ctx.X
        from scipy.linalg import cho_factor
        ctx.XtX_cf = cho_factor(ctx.XtX)
        ctx.g = g
        ctx.identity_target = np.zeros(1)
        st = ModelState(c=np.zeros(4), pi=np.zeros(4), eta=e[:, None], gamma1=np.zeros(1),
                        gamma2=np.zeros(1), rho=0, B=np.zeros((1, 1)), sigma2_eps=1,
                        sigma2_c=1, sigma2_eta=1, lambda1=1, lambda2=1)
        mean, rowcov = ctx.B_conditional(st)
        assert mean[0, 0] == pytest.approx(g / (g + 1) * ols)
        assert rowcov[0, 0] == pytest.approx(g / (g + 1) / (x @ x))


class TestMetropolisRatios:
    def test_membership_ratio_against_dirichlet(self):
        data, ctx, state = _setup()
        a = HP.dirichlet_scale
        rng = np.random.default_rng(5)
        prop = rng.uniform(0.02, 0.98, size=8)
        got = ctx.membership_log_ratio(state, prop)
        for i in range(8):
            s = state.copy()
            s.pi[i] = prop[i]
            old, new = state.pi[i], prop[i]
            expect = (log_joint(s, data, ctx) - log_joint(state, data, ctx)
                      + dirichlet.logpdf([old, 1 - old], [a * new, a * (1 - new)])
                      - dirichlet.logpdf([new, 1 - new], [a * old, a * (1 - old)]))
            assert got[i] == pytest.approx(expect, rel=1e-9, abs=1e-9)

    def test_membership_outside_unit_interval_rejected(self):
        _, ctx, state = _setup()
        prop = state.pi.copy()
        prop[0], prop[1] = 0.0, 1.0
        r = ctx.membership_log_ratio(state, prop)
        assert r[0] == -np.inf and r[1] == -np.inf

    def test_rho_truncation_correction(self):
        sd = RHO_PROPOSAL_SD
        for old, new in ((0.004, 0.012), (0.4, 0.41), (0.02, 0.001)):
            q_back = truncnorm.logpdf(old, -new / sd, np.inf, loc=new, scale=sd)
            q_fwd = truncnorm.logpdf(new, -old / sd, np.inf, loc=old, scale=sd)
            assert rho_truncation_correction(old, new) == pytest.approx(q_back - q_fwd, abs=1e-10)

    def test_rho_ratio_against_joint(self):
        data, ctx, state = _setup()
        new = 0.53
        h2 = new * (ctx.h1 - ctx.t) + ctx.t
        first, vals, _ = ctx._local(h2)
        f2 = ctx._spline(first, vals, state.gamma2)
        s = state.copy()
        s.rho = new
        expect = (log_joint(s, data, ctx) - log_joint(state, data, ctx)
                  + rho_truncation_correction(state.rho, new))
        assert ctx.rho_log_ratio(state, new, f2) == pytest.approx(expect, rel=1e-9)

    def test_tau_rule(self):
        assert adapt_tau(1.0, 0.55, 0.35, 100) == pytest.approx(1.02)
        assert adapt_tau(2.0, 0.35, 0.35, 7) == 2.0
        assert adapt_tau(1.0, 0.0, 0.35, 1) == pytest.approx(0.65)


class TestChain:
    def test_deterministic(self):
        data, _ = simulate_dataset(SimConfig(N=10, seed=1, n_labels=1))
        cfg = ChainConfig(n_iter=60, n_burnin=30, seed=9)
        a = run_chain(data, cfg=cfg)
        b = run_chain(data, cfg=cfg)
        for k in ("c", "pi", "eta", "gamma1", "gamma2", "rho", "loglik"):
            np.testing.assert_array_equal(getattr(a, k), getattr(b, k))

    def test_draw_count_and_thinning(self):
        data, _ = simulate_dataset(SimConfig(N=10, seed=1, n_labels=1))
        out = run_chain(data, cfg=ChainConfig(n_iter=50, n_burnin=20, thin=4, seed=1))
        assert len(out) == 8
        assert out.eta.shape == (8, 10, 3)

    def test_constraints_after_every_retained_sweep(self):
        data, _ = simulate_dataset(SimConfig(N=20, seed=2))
        out = run_chain(data, cfg=ChainConfig(n_iter=120, n_burnin=20, seed=2))
        lab = data.labels == FEATURE1
        assert np.max(np.abs(out.c.sum(axis=1))) < 1e-10
        assert np.max(np.abs(out.gamma1.sum(axis=1))) < 1e-10
        assert np.max(np.abs(out.eta.mean(axis=1) - out.identity_target)) < 1e-10
        assert np.all(out.pi[:, lab] == 1.0)
        assert np.all(out.pi.min(axis=1) == 0.0)
        assert np.all(out.pi.max(axis=1) == 1.0)

    def test_fixed_rho(self):
        data, _ = simulate_dataset(SimConfig(N=10, seed=1, n_labels=1))
        out = run_chain(data, cfg=ChainConfig(n_iter=40, n_burnin=10, rho_mode="fixed", rho_value=0.0))
        assert np.all(out.rho == 0.0)
        assert np.isnan(out.accept_rho)

    def test_regression_rank_check(self):
        data, _ = simulate_dataset(SimConfig(N=10, seed=1, n_labels=1))
        X = np.ones((10, 2))
        bad = Dataset(data.times, data.values, covariates=X, labels=data.labels)
        from warpmix.model import DataError
        with pytest.raises(DataError):
            run_chain(bad, cfg=ChainConfig(n_iter=5, n_burnin=1, regression_enabled=True))

    def test_regression_chain_runs(self):
        data, _ = simulate_dataset(SimConfig(N=12, seed=1, n_labels=1))
        X = np.random.default_rng(0).normal(size=(12, 2))
        d = Dataset(data.times, data.values, covariates=X - X.mean(0), labels=data.labels)
        out = run_chain(d, cfg=ChainConfig(n_iter=40, n_burnin=10, regression_enabled=True))
        assert out.B.shape == (30, 2, 3) and np.all(np.isfinite(out.B))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ChainConfig(n_iter=10, n_burnin=10)
        with pytest.raises(ValueError):
            ChainConfig(rho_mode="other")


def _batch_se(x, n_batches=20):
    b = np.asarray(x)[: len(x) // n_batches * n_batches].reshape(n_batches, -1).mean(axis=1)
    return b.std(ddof=1) / np.sqrt(n_batches)


def run_successive_conditional(n_cycles=20_000, seed=11):
    """Alternate y ~ p(y | theta) and one sweep of theta ~ p(theta | y).

    Returns traces of (c_1, sigma2_eps, pi_1) and the hyperparameters used.
    """
    # a noise prior wide enough that one sweep moves the memberships appreciably
    hp = Hyperparameters(a_eps=3.0, b_eps=1.0, a_c=3.0, b_c=0.2, a_lambda=3.0, b_lambda=2.0,
                         a_eta=3.0, b_eta=0.5, alpha=0.5, dirichlet_scale=20.0)
    N, n = 5, 10
    t = np.linspace(0, 1, n)
    rng = np.random.default_rng(seed)
    data = Dataset([t] * N, [np.zeros(n)] * N)
    cfg = ChainConfig(n_iter=2, n_burnin=1, rho_mode="fixed", rho_value=0.4, identifiability=False)
    ctx = ChainContext(data, hp, cfg)
    K = ctx.K
    om_inv = np.linalg.inv(ctx.omega)

    def ig(a, b):
        return b / rng.gamma(a)

    s2c, lam1, lam2, s2eta, s2eps = ig(3, 0.2), ig(3, 2), ig(3, 2), ig(3, 0.5), ig(3, 1.0)
    state = ModelState(
        c=rng.normal(0, np.sqrt(s2c), N), pi=rng.beta(0.5, 0.5, N),
        eta=ctx.identity_target + np.sqrt(s2eta) * rng.normal(size=(N, 3)),
        gamma1=rng.multivariate_normal(np.zeros(K), lam1 * om_inv),
        gamma2=rng.multivariate_normal(np.zeros(K), lam2 * om_inv),
        rho=0.4, B=np.zeros((0, 3)), sigma2_eps=s2eps, sigma2_c=s2c,
        sigma2_eta=s2eta, lambda1=lam1, lambda2=lam2,
    )
    ctx.refresh(state)
    tau = np.full(N, 0.5)
    trace = np.empty((n_cycles, 3))
    for k in range(n_cycles):
        y = ctx.means(state) + np.sqrt(state.sigma2_eps) * rng.standard_normal(ctx.y.size)
        ctx.set_values(y)
        state, _, _, _ = ctx.sweep(state, rng, tau)
        trace[k] = state.c[0], state.sigma2_eps, state.pi[0]
    return trace, hp


def test_successive_conditional_recovers_prior_means():
    trace, hp = run_successive_conditional()
    prior_means = [0.0, hp.b_eps / (hp.a_eps - 1), 0.5]
    for col, target in enumerate(prior_means):
        se = _batch_se(trace[:, col])
        assert abs(trace[:, col].mean() - target) < 3 * se, (col, trace[:, col].mean(), target, se)
