"""Growth model: curve values, Weibull parametrization, MC probabilities."""

import numpy as np
import pytest
from scipy.special import gammaln

from prior_forge import CovariateSet, HyperParams, Partition, interval_bin
from prior_forge.models import GrowthWeibullModel, growth_curve
from prior_forge.models.growth import THETA_REFERENCE, growth_curve_partials

INF = np.inf

# Direct formula evaluation at the reference curve parameters.
H_REF_17_5 = 173.90761343224133


def _richardson_fd(func, u0, k, h):
    """Central difference with one Richardson step (kills the h² term);
    common random numbers make ``func`` smooth, curvature still bites."""

    def central(step):
        up, um = u0.copy(), u0.copy()
        up[k] += step
        um[k] -= step
        return (func(up) - func(um)) / (2 * step)

    d1, d2 = central(h), central(h / 2)
    return (4.0 * d2 - d1) / 3.0


def _point_mass_lam(model, theta, b_mean=200.0):
    """Nearly degenerate priors: tiny log-variances, huge Gamma shape."""
    shape = 1e7
    flat = [shape, b_mean / shape]
    for v in theta:
        flat += [float(np.log(v)), 1e-14]
    return HyperParams(model.hyperparam_spec(), np.asarray(flat))


class TestGrowthCurve:
    def test_value_at_spurt_age_is_exact(self):
        theta = np.asarray(THETA_REFERENCE)
        assert growth_curve(14.6, theta) == pytest.approx(162.9, abs=1e-12)

    def test_reference_value_at_17_5(self):
        assert growth_curve(17.5, np.asarray(THETA_REFERENCE)) == \
            pytest.approx(H_REF_17_5, abs=1e-10)

    def test_adult_limit(self):
        theta = np.asarray(THETA_REFERENCE)
        assert growth_curve(1e6, theta) == pytest.approx(174.6, abs=1e-9)

    def test_monotone_on_childhood_grid(self):
        theta = np.asarray(THETA_REFERENCE)
        ts = np.arange(0.0, 20.0 + 1e-9, 0.1)
        vals = [growth_curve(t, theta) for t in ts]
        assert np.all(np.diff(vals) > 0)

    def test_partials_match_finite_differences(self):
        rng = np.random.default_rng(31)
        theta = np.abs(rng.normal([5.2, 5.0, 14, 0.1, 1.2],
                                  [0.2, 0.2, 2, 0.02, 0.3], size=(40, 5)))
        for t in (0.0, 2.5, 10.0, 17.5):
            _, grad = growth_curve_partials(t, theta)
            for d in range(5):
                h = 1e-4 * max(np.abs(theta[:, d]).mean(), 1e-2)
                tp, tm = theta.copy(), theta.copy()
                tp[:, d] += h
                tm[:, d] -= h
                fd = (growth_curve(t, tp) - growth_curve(t, tm)) / (2 * h)
                np.testing.assert_allclose(grad[:, d], fd, rtol=1e-4, atol=1e-9)


class TestWeibullParametrization:
    def test_mean_is_exp_h(self):
        # Mean parametrization by construction: E[Y|θ, b] = exp(h(t; θ)).
        model = GrowthWeibullModel()
        theta = (5.16, 5.09, 14.6, 0.1, 1.2)     # log-stature scale
        lam = _point_mass_lam(model, theta, b_mean=30.0)
        t = 17.5
        draws = model.predictive_draws(lam, t, seed=2, draws=100_000)
        h = growth_curve(t, np.asarray(theta))
        se = draws.std() / np.sqrt(draws.size)
        assert abs(draws.mean() - np.exp(h)) < 3 * se

    def test_degenerate_prior_full_line_mass_one(self):
        model = GrowthWeibullModel()
        lam = _point_mass_lam(model, THETA_REFERENCE, b_mean=500.0)
        part = Partition(bins=(interval_bin(0.0, INF),))
        bp = model.bin_probabilities(lam, CovariateSet((10.0,)), part, seed=0)
        assert bp.values[0] == pytest.approx(1.0, abs=1e-12)


class TestMonteCarloProbabilities:
    def setup_method(self):
        self.model = GrowthWeibullModel()
        self.lam = self.model.default_hyperparams()
        self.x = CovariateSet((17.5,), "t=17.5")
        self.part = Partition(bins=(
            interval_bin(0.0, 150.0), interval_bin(150.0, 170.0),
            interval_bin(170.0, 180.0), interval_bin(180.0, INF)))

    def test_values_sum_to_one_exactly_by_telescoping(self):
        bp = self.model.bin_probabilities(self.lam, self.x, self.part, seed=4)
        assert bp.values.sum() == pytest.approx(1.0, abs=1e-12)
        assert bp.estimator_sd is not None

    def test_matches_plain_monte_carlo_oracle(self):
        # Brute-force draw of the full generative model, no reparametrization.
        bp = self.model.bin_probabilities(self.lam, self.x, self.part, seed=4)
        lamd = self.lam.as_dict()
        rng = np.random.default_rng(1234)
        n = 1_000_000
        b = np.clip(rng.gamma(lamd["a0"], lamd["b0"], size=n), 1e-6, 200.0)
        theta = np.stack([
            np.exp(rng.normal(lamd[f"a{d}"], np.sqrt(lamd[f"b{d}"]), size=n))
            for d in range(1, 6)], axis=1)
        h = growth_curve(17.5, theta)
        scale = np.exp(h - gammaln(1.0 + 1.0 / b))
        y = scale * rng.exponential(size=n) ** (1.0 / b)
        for i, bn in enumerate(self.part.bins):
            lo, hi = bn.lower[0], bn.upper[0]
            frac = np.mean((y > lo) & (y <= hi))
            se_o = np.sqrt(frac * (1 - frac) / n)
            tol = 3 * (bp.estimator_sd[i] + se_o)
            assert abs(bp.values[i] - frac) < tol + 1e-9

    def test_jacobian_matches_finite_differences_crn(self):
        bp = self.model.bin_probabilities(self.lam, self.x, self.part,
                                          want_jacobian=True, seed=3)
        u0 = self.lam.unconstrained()
        spec = self.model.hyperparam_spec()
        J = bp.jacobian @ self.lam.constrain_jacobian()

        def values_at(u):
            return self.model.bin_probabilities(
                HyperParams.from_unconstrained(spec, u), self.x, self.part,
                seed=3).values

        for k in range(u0.size):
            fd = _richardson_fd(values_at, u0, k, 2e-5)
            np.testing.assert_allclose(
                J[:, k], fd, rtol=1e-3, atol=1e-6,
                err_msg=f"coordinate {spec.unconstrained_names[k]}")

    def test_reproducible_under_seed(self):
        a = self.model.bin_probabilities(self.lam, self.x, self.part, seed=8)
        b = self.model.bin_probabilities(self.lam, self.x, self.part, seed=8)
        np.testing.assert_array_equal(a.values, b.values)

    def test_curve_summary_reports_both_scales(self):
        out = self.model.curve_summary(self.lam, (0.0, 17.5), seed=0, draws=2048)
        ages = out["ages"]
        assert {r["age"] for r in ages} == {0.0, 17.5}
        for r in ages:
            assert np.isfinite(r["median_h"])
            # exp is monotone, so the medians line up across the two scales
            # (up to the even-sample interpolation of np.median)
            assert r["median_exp_h"] == pytest.approx(
                np.exp(r["median_h"]), rel=1e-3)
            assert r["mean_exp_h"] > 0


class TestStartHeuristic:
    def test_initial_point_tracks_judged_medians(self):
        from prior_forge import JudgementSet, quantile_judgement
        model = GrowthWeibullModel()
        items = []
        for t, med in ((0.0, 74.0), (2.5, 96.0), (10.0, 138.0), (17.5, 174.0)):
            ys = [med * f for f in (0.9, 0.96, 1.0, 1.04, 1.1)]
            items.append(quantile_judgement(
                ys, covariate=CovariateSet((t,), f"t={t}"), support=(0.0, INF)))
        js = JudgementSet(tuple(items))
        lam = model.initial_hyperparams(js)
        # Judgements live on the exp(h) scale, so the adult-stature parameter
        # starts near log(log(174 cm)).
        assert lam["a1"] == pytest.approx(np.log(np.log(174.0) + 0.02), abs=0.05)
        assert lam["a4"] == pytest.approx(np.log(0.1), abs=1e-12)
        assert lam["a5"] == pytest.approx(0.0, abs=1e-12)
