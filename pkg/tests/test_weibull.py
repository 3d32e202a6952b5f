import math

import numpy as np
import pytest
from scipy import integrate

from monohaz import (
    Dataset,
    NonIdentifiableError,
    Scenario,
    WeibullBaseline,
    WeibullTheta,
    conditional_cdf,
    fit_weibull,
    param_cum_hazard,
    param_hazard,
    sample,
    weibull_loglik,
    weibull_loglik_gradient,
)
from monohaz._rng import derive_seed


def make_scen(mu, nu, beta=0.5, tau=3.5, window=(0.5, 2.5), n=100):
    return Scenario(
        baseline=WeibullBaseline(mu, nu), beta=(beta,), censor_tau=tau,
        window=window, n=n,
    )


class TestLoglik:
    def test_exponential_profile(self):
        data = Dataset([1.0, 2.0, 3.0], [1, 1, 1], [[0.0]] * 3)
        for mu in (0.2, 0.5, 1.3):
            theta = WeibullTheta(mu, 1.0, (0.0,))
            assert weibull_loglik(data, theta) == pytest.approx(
                3 * math.log(mu) - 6 * mu
            )
        # closed-form maximizer of 3 log(mu) - 6 mu
        grid = np.linspace(0.05, 2.0, 2000)
        vals = [
            weibull_loglik(data, WeibullTheta(m, 1.0, (0.0,))) for m in grid
        ]
        assert grid[int(np.argmax(vals))] == pytest.approx(0.5, abs=1e-3)

    def test_censored_only_value(self):
        data = Dataset([1.0, 2.0], [0, 0], [[0.0], [0.0]])
        theta = WeibullTheta(0.5, 0.8, (0.0,))
        expect = -((0.5 * 1.0) ** 0.8 + (0.5 * 2.0) ** 0.8)
        assert weibull_loglik(data, theta) == pytest.approx(expect)

    def test_censored_only_not_identifiable(self):
        data = Dataset([1.0, 2.0], [0, 0], [[0.0], [0.0]])
        with pytest.raises(NonIdentifiableError):
            fit_weibull(data)

    def test_event_at_zero_rejected(self):
        data = Dataset([0.0, 2.0], [1, 0], [[0.0], [0.0]])
        with pytest.raises(ValueError):
            weibull_loglik(data, WeibullTheta(1.0, 0.5, (0.0,)))

    def test_gradient_matches_finite_differences(self):
        data = sample(make_scen(1.0, 0.7, n=20), 3)
        rng = np.random.default_rng(8)
        h = 1e-6
        for _ in range(5):
            mu, nu, b = rng.uniform(0.3, 2.0), rng.uniform(0.3, 1.5), rng.uniform(-1, 1)
            g = weibull_loglik_gradient(data, WeibullTheta(mu, nu, (b,)))
            for k, (lo, hi) in enumerate(
                [
                    (WeibullTheta(mu - h, nu, (b,)), WeibullTheta(mu + h, nu, (b,))),
                    (WeibullTheta(mu, nu - h, (b,)), WeibullTheta(mu, nu + h, (b,))),
                    (WeibullTheta(mu, nu, (b - h,)), WeibullTheta(mu, nu, (b + h,))),
                ]
            ):
                fd = (weibull_loglik(data, hi) - weibull_loglik(data, lo)) / (2 * h)
                assert g[k] == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestFitWeibull:
    def test_recovers_exponential(self):
        data = sample(make_scen(1.0, 1.0, beta=0.0, tau=100.0, window=(0.1, 1.0), n=5000), 13)
        theta = fit_weibull(data)
        assert theta.mu == pytest.approx(1.0, abs=0.05)
        assert theta.nu == pytest.approx(1.0, abs=0.05)

    def test_recovers_reference_scenario(self):
        # mu-hat and beta-hat are anti-correlated through exp(nu log mu
        # + beta E[Z]) with sd ~ 0.075 each at n = 5000, so the +-0.07
        # band is asserted on the mean over 10 seeds (~3 sigma)
        fits = []
        for s in range(10):
            data = sample(make_scen(1.0, 0.5, beta=0.5, n=5000), derive_seed(29, s))
            th = fit_weibull(data)
            fits.append([th.mu, th.nu, th.beta[0]])
        mean = np.mean(fits, axis=0)
        np.testing.assert_allclose(mean, [1.0, 0.5, 0.5], atol=0.07)

    def test_stationary_point(self):
        data = sample(make_scen(1.0, 0.5, n=400), 5)
        theta = fit_weibull(data)
        g = weibull_loglik_gradient(data, theta)
        # gradient wrt (mu, nu, beta) rescales the optimizer's criterion
        assert np.max(np.abs(g)) < 1e-4

    def test_order_invariance(self):
        data = sample(make_scen(1.0, 0.5, n=300), 6)
        theta = fit_weibull(data)
        perm = np.random.default_rng(0).permutation(data.n)
        theta2 = fit_weibull(data.take(perm))
        assert theta2.mu == pytest.approx(theta.mu, abs=1e-7)
        assert theta2.nu == pytest.approx(theta.nu, abs=1e-7)

    def test_warm_start_agrees(self):
        data = sample(make_scen(1.0, 0.5, n=300), 9)
        cold = fit_weibull(data)
        warm = fit_weibull(data, init=WeibullTheta(0.9, 0.6, (0.4,)))
        assert warm.mu == pytest.approx(cold.mu, abs=1e-6)
        assert warm.nu == pytest.approx(cold.nu, abs=1e-6)


class TestParamFunctions:
    def test_unit_exponential(self):
        theta = WeibullTheta(1.0, 1.0, (0.0,))
        t = np.linspace(0.1, 3, 7)
        np.testing.assert_allclose(param_hazard(theta, t), 1.0)
        np.testing.assert_allclose(
            conditional_cdf(theta, t, [0.0]), 1 - np.exp(-t)
        )

    def test_substitution(self):
        theta = WeibullTheta(2.0, 0.5, (0.0,))
        assert param_hazard(theta, 4.0) == pytest.approx(math.sqrt(2) / 4)

    def test_hazard_diverges_at_zero(self):
        theta = WeibullTheta(1.0, 0.5, (0.0,))
        with pytest.raises(ValueError):
            param_hazard(theta, 0.0)

    def test_cdf_axioms(self):
        theta = WeibullTheta(1.3, 0.6, (0.4,))
        x = np.linspace(0.0, 50.0, 400)
        f = conditional_cdf(theta, x, [0.7])
        assert np.all(np.diff(f) >= 0)
        assert f[0] == 0.0
        assert f[-1] == pytest.approx(1.0, abs=1e-6)

    def test_cum_hazard_is_antiderivative(self):
        theta = WeibullTheta(0.8, 0.6, (0.0,))
        val, _ = integrate.quad(
            lambda t: param_hazard(theta, t), 0.1, 5.0, epsabs=1e-12, epsrel=1e-10
        )
        expect = param_cum_hazard(theta, 5.0) - param_cum_hazard(theta, 0.1)
        assert val == pytest.approx(expect, abs=1e-8)

    @pytest.mark.parametrize("nu,decreasing", [(0.5, True), (0.9, True), (1.5, False)])
    def test_monotone_iff_nu_below_one(self, nu, decreasing):
        theta = WeibullTheta(1.0, nu, (0.0,))
        grid = np.linspace(0.05, 10, 500)
        h = param_hazard(theta, grid)
        assert np.all(np.diff(h) < 0) == decreasing
