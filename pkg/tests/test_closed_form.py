import math

import numpy as np
import pytest

from benchbeat import closed_form as cf
from benchbeat import jump_model as jm


@pytest.fixture(scope="module")
def ctx():
    params = jm.calibrated_high_inflation_params()
    return cf.ClosedFormContext(
        moments=jm.jump_moments(params),
        mu1=float(params.mu[0]),
        mu2=float(params.mu[1]),
        beta=0.01,
        c=10.0,
        T=10.0,
        varrho_hat=0.7,
        p_min=0.0,
        p_max=1.3,
    )


class TestCoefficients:
    def test_terminal_values(self, ctx):
        assert cf.coef_A(ctx, 10.0) == 0.0
        assert cf.coef_D(ctx, 10.0) == 0.0
        assert cf.coef_B(ctx, 10.0) == 0.0

    def test_A_positive_before_T(self, ctx):
        for t in np.linspace(0.0, 9.99, 50):
            assert cf.coef_A(ctx, t) > 0

    def test_matches_ode_integration(self, ctx):
        # independent 4th-order backward integration of the coefficient ODEs
        rng = np.random.default_rng(23)
        betas = rng.uniform(0.0, 0.05, size=40)
        cs = rng.uniform(0.0, 20.0, size=40)
        ts, A, D, B = cf.ode_oracle(ctx, n_steps=4000, betas=betas, cs=cs)
        sample = rng.choice(len(ts), size=60, replace=False)
        for k in sample:
            t = ts[k]
            assert cf.coef_A(ctx, t) == pytest.approx(A[k], rel=1e-6, abs=1e-10)
            for j in (0, 7, 21):
                assert cf.coef_D(ctx, t, beta=betas[j]) == pytest.approx(
                    D[j, k], rel=1e-6, abs=1e-10
                )
                assert cf.coef_B(ctx, t, beta=betas[j], c=cs[j]) == pytest.approx(
                    B[j, k], rel=1e-6, abs=1e-10
                )

    def test_degenerate_exponent_stability(self):
        # push 2*mu2 - eta through zero; divided differences must stay smooth
        params = jm.calibrated_high_inflation_params()
        mom = jm.jump_moments(params)
        eta = mom.eta
        for mu2 in (eta / 2 - 1e-9, eta / 2, eta / 2 + 1e-9):
            c = cf.ClosedFormContext(
                moments=mom, mu1=mu2 + 0.06, mu2=mu2, beta=0.01, c=10.0, T=10.0, varrho_hat=0.7
            )
            a = cf.coef_A(c, 3.0)
            assert np.isfinite(a) and a > 0
        # beta -> 0 limit of D gives g = 1 exactly
        c0 = cf.ClosedFormContext(
            moments=mom, mu1=0.051, mu2=-0.014, beta=0.0, c=10.0, T=10.0, varrho_hat=0.7
        )
        for t in (0.0, 5.0, 9.999999):
            assert cf.g_fn(c0, t) == pytest.approx(1.0, abs=1e-9)


class TestGH:
    def test_g_bounds_and_monotonicity(self, ctx):
        # e^{beta t} <= g(t) <= e^{beta T}, g increasing in t and in beta
        rng = np.random.default_rng(4)
        ts = np.sort(rng.uniform(0.0, 10.0, size=200))
        gs = np.array([cf.g_fn(ctx, t) for t in ts])
        assert np.all(gs >= np.exp(ctx.beta * ts) - 1e-12)
        assert np.all(gs <= math.exp(ctx.beta * ctx.T) + 1e-12)
        assert np.all(np.diff(gs) >= -1e-12)
        g_lo = np.array([cf.g_fn(ctx, t, beta=0.005) for t in ts])
        assert np.all(gs - g_lo >= -1e-12)

    def test_g_terminal_limit(self, ctx):
        assert cf.g_fn(ctx, 10.0) == pytest.approx(math.exp(0.01 * 10.0), rel=1e-12)
        assert cf.g_fn(ctx, 10.0 - 1e-9) == pytest.approx(math.exp(0.1), rel=1e-6)

    def test_h_nonnegative_zero_at_T_linear_in_c(self, ctx):
        rng = np.random.default_rng(8)
        for t in rng.uniform(0.0, 10.0, size=200):
            h1 = cf.h_fn(ctx, t, c=1.0)
            h5 = cf.h_fn(ctx, t, c=5.0)
            assert h1 >= -1e-12
            assert h5 == pytest.approx(5.0 * h1, rel=1e-10, abs=1e-12)
        assert cf.h_fn(ctx, 10.0) == 0.0
        assert cf.h_fn(ctx, 3.0, c=0.0) == 0.0


class TestControl:
    def test_contrarian_in_wealth(self, ctx):
        # fixing t and benchmark wealth, allocation decreases as wealth rises
        w = np.linspace(50.0, 300.0, 40)
        p = cf.optimal_control(ctx, 4.0, w, 120.0)
        assert np.all(np.diff(p) < 0)

    def test_components_sum(self, ctx):
        pc, ptr = cf.control_components(ctx, 2.0, 110.0, 100.0)
        assert pc + ptr == pytest.approx(cf.optimal_control(ctx, 2.0, 110.0, 100.0))

    def test_cash_component_vanishes_without_injections(self, ctx):
        pc, _ = cf.control_components(ctx, 2.0, 110.0, 100.0)
        ctx0 = cf.ClosedFormContext(
            moments=ctx.moments, mu1=ctx.mu1, mu2=ctx.mu2, beta=ctx.beta,
            c=0.0, T=ctx.T, varrho_hat=ctx.varrho_hat,
        )
        pc0, _ = cf.control_components(ctx0, 2.0, 110.0, 100.0)
        assert pc > 0 and pc0 == 0.0

    def test_clipped_respects_bounds(self, ctx):
        rng = np.random.default_rng(12)
        w = rng.uniform(1.0, 500.0, size=1000)
        w_hat = rng.uniform(1.0, 500.0, size=1000)
        p = cf.clipped_control(ctx, 5.0, w, w_hat)
        assert np.all(p >= ctx.p_min) and np.all(p <= ctx.p_max)

    def test_zero_wealth_rejected(self, ctx):
        with pytest.raises(ValueError):
            cf.optimal_control(ctx, 1.0, 0.0, 100.0)

    def test_drift_assumption_warning(self, ctx):
        with pytest.warns(RuntimeWarning):
            cf.ClosedFormContext(
                moments=ctx.moments, mu1=0.0, mu2=0.05, beta=0.01, c=10.0,
                T=10.0, varrho_hat=0.7,
            )
