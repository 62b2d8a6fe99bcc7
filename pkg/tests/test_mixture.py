"""Gaussian mixture model: probabilities, derivatives, invariants."""

import math

import numpy as np
import pytest
from scipy import integrate

from prior_forge import CovariateSet, HyperParams, Partition, interval_bin
from prior_forge.errors import NonPositiveVariance
from prior_forge.experiments import fig1_partition
from prior_forge.models import GaussianMixtureModel, fig1_hyperparams

INF = math.inf
X = CovariateSet()


def _quadrature_bin(lam, lo, hi):
    mu = [lam["mu1"], lam["mu2"]]
    w = [lam["w1"], lam["w2"]]
    var = [lam["sigma_sq"] + lam["sigma1_sq"], lam["sigma_sq"] + lam["sigma2_sq"]]

    def dens(y):
        return sum(wk * np.exp(-0.5 * (y - m) ** 2 / v) / np.sqrt(2 * np.pi * v)
                   for wk, m, v in zip(w, mu, var))

    val, _ = integrate.quad(dens, lo, hi)
    return val


class TestBinProbability:
    def setup_method(self):
        self.model = GaussianMixtureModel(2)
        self.lam = fig1_hyperparams(self.model)

    def test_symmetric_half_line(self):
        part = Partition(bins=(interval_bin(-INF, 0.0), interval_bin(0.0, INF)))
        bp = self.model.bin_probabilities(self.lam, X, part)
        np.testing.assert_allclose(bp.values, [0.5, 0.5], atol=1e-14)

    def test_matches_quadrature_oracle(self):
        bp = self.model.bin_probabilities(
            self.lam, X, Partition(bins=(interval_bin(0.0, 2.0),
                                         interval_bin(-INF, 0.0),
                                         interval_bin(2.0, INF))))
        assert bp.values[0] == pytest.approx(0.2488305662547383, abs=1e-10)
        assert bp.values[0] == pytest.approx(
            _quadrature_bin(self.lam, 0.0, 2.0), abs=1e-10)

    def test_full_line_is_one(self):
        part = Partition(bins=(interval_bin(-INF, INF),))
        bp = self.model.bin_probabilities(self.lam, X, part)
        assert bp.values[0] == pytest.approx(1.0, abs=1e-14)

    def test_fig1_partition_sums_to_one(self):
        bp = self.model.bin_probabilities(self.lam, X, fig1_partition())
        assert abs(bp.values.sum() - 1.0) < 1e-10

    def test_rejects_nonpositive_variance(self):
        bad = HyperParams(self.lam.spec,
                          np.array([-2.0, 2.0, -1.0, 1.0, 1.0, 0.5, 0.5]))
        with pytest.raises(NonPositiveVariance):
            self.model.bin_probabilities(bad, X, fig1_partition())


class TestDerivatives:
    def test_jacobian_matches_finite_differences_unconstrained(self):
        model = GaussianMixtureModel(2)
        rng = np.random.default_rng(7)
        spec = model.hyperparam_spec()
        part = fig1_partition()
        for _ in range(10):
            u0 = rng.normal(0, 0.6, size=6) + np.array([-2, 2, 0, 0, 0, 0])
            lam = HyperParams.from_unconstrained(spec, u0)
            bp = model.bin_probabilities(lam, X, part, want_jacobian=True)
            J = bp.jacobian @ lam.constrain_jacobian()
            h = 1e-6
            for k in range(6):
                up, um = u0.copy(), u0.copy()
                up[k] += h
                um[k] -= h
                vp = model.bin_probabilities(
                    HyperParams.from_unconstrained(spec, up), X, part).values
                vm = model.bin_probabilities(
                    HyperParams.from_unconstrained(spec, um), X, part).values
                fd = (vp - vm) / (2 * h)
                np.testing.assert_allclose(
                    J[:, k], fd, rtol=1e-5, atol=1e-9,
                    err_msg=f"coordinate {spec.unconstrained_names[k]}")

    def test_jacobian_columns_sum_to_zero_unconstrained(self):
        model = GaussianMixtureModel(2)
        lam = fig1_hyperparams(model)
        bp = model.bin_probabilities(lam, X, fig1_partition(), want_jacobian=True)
        J = bp.jacobian @ lam.constrain_jacobian()
        np.testing.assert_allclose(J.sum(axis=0), 0.0, atol=1e-8)


class TestInvariants:
    def test_relabeling_invariance_after_canonicalization(self):
        model = GaussianMixtureModel(2)
        spec = model.hyperparam_spec()
        lam = HyperParams(spec, np.array([-1.0, 2.5, 0.8, 0.5, 1.5, 0.3, 0.7]))
        swapped = HyperParams(spec, np.array([2.5, -1.0, 0.8, 1.5, 0.5, 0.7, 0.3]))
        part = fig1_partition()
        a = model.bin_probabilities(model.canonicalize(lam), X, part).values
        b = model.bin_probabilities(model.canonicalize(swapped), X, part).values
        np.testing.assert_allclose(a, b, atol=1e-14)

    def test_density_integrates_to_one(self):
        model = GaussianMixtureModel(2)
        lam = fig1_hyperparams(model)
        ys = np.linspace(-8, 8, 2001)
        dens = model.predictive_density(lam, ys)
        assert np.trapezoid(dens, ys) == pytest.approx(1.0, abs=1e-3)

    def test_moment_start_is_reasonable(self):
        from prior_forge import JudgementSet, make_judgement
        model = GaussianMixtureModel(2)
        lam0 = fig1_hyperparams(model)
        part = fig1_partition()
        p = model.bin_probabilities(lam0, X, part).values
        js = JudgementSet((make_judgement(p, part, X),))
        start = model.initial_hyperparams(js)
        assert start["mu1"] < 0 < start["mu2"]
        assert start["sigma_sq"] > 0
