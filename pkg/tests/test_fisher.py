"""Dirichlet and hyperparameter Fisher information."""

import numpy as np
import pytest

from prior_forge import (CovariateSet, HyperParams, JudgementSet, Partition,
                         dirichlet_fisher, hyper_fisher, make_judgement)
from prior_forge.errors import NonInteriorP, SingularFisher
from prior_forge.experiments import fig1_partition
from prior_forge.fisher import FisherMatrix
from prior_forge.models import (GaussianMixtureModel, ProbitGLMModel,
                                fig1_hyperparams)

X = CovariateSet()

# Frozen from an independent trigamma implementation (mpmath, 40 digits).
H_ALPHA10 = np.array([
    [53.976773116654066, -10.516633568168574, -10.516633568168574],
    [-10.516633568168574, 28.97677311665407, -10.516633568168574],
    [-10.516633568168574, -10.516633568168574, 11.615662005542958]])
H_ALPHA20 = np.array([
    [93.02085312076488, -20.508329174081247, -20.508329174081247],
    [-20.508329174081247, 52.02085312076488, -20.508329174081247],
    [-20.508329174081247, -20.508329174081247, 21.55820509859305]])


class TestDirichletFisher:
    def test_two_bin_symmetric_case(self):
        # α = 2, P = (½, ½): diagonal 4ψ′(1) − 4ψ′(2) + ... works out to 4,
        # off-diagonal −4ψ′(2) = −4(π²/6 − 1).
        H = dirichlet_fisher(2.0, np.array([0.5, 0.5]))
        np.testing.assert_allclose(np.diag(H), 4.0, atol=1e-12)
        assert H[0, 1] == pytest.approx(-2.5797362673929056, abs=1e-12)
        assert H[0, 1] == pytest.approx(-4.0 * (np.pi ** 2 / 6.0 - 1.0), abs=1e-12)

    def test_entrywise_against_independent_trigamma(self):
        H = dirichlet_fisher(10.0, np.array([0.2, 0.3, 0.5]))
        np.testing.assert_allclose(H, H_ALPHA10, atol=1e-10)

    def test_concentration_scaling_pinned(self):
        H = dirichlet_fisher(20.0, np.array([0.2, 0.3, 0.5]))
        np.testing.assert_allclose(H, H_ALPHA20, atol=1e-10)

    def test_matches_score_covariance_oracle(self):
        # Fisher = Cov of the score in P-coordinates; estimate the covariance
        # of α·log p over p ~ D(αP) by plain Monte Carlo.
        alpha, P = 2.0, np.array([0.5, 0.5])
        rng = np.random.default_rng(123)
        draws = rng.dirichlet(alpha * P, size=400_000)
        score = alpha * np.log(draws)
        emp = np.cov(score.T)
        np.testing.assert_allclose(emp, dirichlet_fisher(alpha, P), atol=0.08)

    def test_rejects_non_interior(self):
        with pytest.raises(NonInteriorP):
            dirichlet_fisher(2.0, np.array([0.0, 1.0]))


class TestFisherMatrix:
    def test_solve_is_spd_solve(self):
        A = np.array([[4.0, 1.0], [1.0, 3.0]])
        fm = FisherMatrix(A, "closed-form")
        rhs = np.array([1.0, 2.0])
        np.testing.assert_allclose(fm.solve(rhs, jitter=1e-14),
                                   np.linalg.solve(A, rhs), rtol=1e-9)

    def test_jitter_escalation_then_failure(self):
        bad = FisherMatrix(np.array([[1.0, 0.0], [0.0, -5.0]]), "closed-form")
        with pytest.raises(SingularFisher):
            bad.solve(np.ones(2), jitter=1e-8)

    def test_singular_but_psd_is_rescued_by_jitter(self):
        sing = FisherMatrix(np.outer([1.0, 2.0], [1.0, 2.0]), "closed-form")
        out = sing.solve(np.array([1.0, 2.0]), jitter=1e-8)
        assert np.all(np.isfinite(out))


class TestHyperFisher:
    def test_scalar_quadratic_form(self):
        # One free hyperparameter: H = gᵀ H_P g ≥ 0.
        model = GaussianMixtureModel(2)
        lam = fig1_hyperparams(model)
        part = fig1_partition()
        js = JudgementSet((make_judgement(
            model.bin_probabilities(lam, X, part).values, part, X),))
        fm = hyper_fisher(25.0, lam, model, js)
        assert fm.matrix.shape == (6, 6)
        # every diagonal entry is itself a quadratic form g_kᵀ H_P g_k
        assert np.all(np.diag(fm.matrix) >= 0)

    def test_mixture_fisher_positive_definite_after_jitter(self):
        model = GaussianMixtureModel(2)
        lam = fig1_hyperparams(model)
        part = fig1_partition()
        js = JudgementSet((make_judgement(
            model.bin_probabilities(lam, X, part).values, part, X),))
        fm = hyper_fisher(1000.0, lam, model, js)
        fm.check()                                   # symmetric, PSD pre-jitter
        eig = np.linalg.eigvalsh(fm.matrix + 1e-8 * np.eye(6))
        assert eig.min() > 0

    def test_covariate_additivity(self):
        model = ProbitGLMModel(2)
        lam = model.default_hyperparams()
        atoms = Partition(atoms=(0.0, 1.0))
        rng = np.random.default_rng(5)
        covs = [CovariateSet(tuple(rng.normal(size=2)), f"x{j}")
                for j in range(5)]
        items = tuple(make_judgement([0.4, 0.6], atoms, c) for c in covs)
        total = hyper_fisher(10.0, lam, model, JudgementSet(items)).matrix
        parts = sum(hyper_fisher(10.0, lam, model,
                                 JudgementSet((it,))).matrix for it in items)
        np.testing.assert_allclose(total, parts, rtol=1e-12)

    def test_symmetry_tolerance(self):
        model = ProbitGLMModel(3)
        lam = model.default_hyperparams()
        atoms = Partition(atoms=(0.0, 1.0))
        js = JudgementSet((make_judgement([0.3, 0.7], atoms,
                                          CovariateSet((1.0, -1.0, 0.5))),))
        fm = hyper_fisher(50.0, lam, model, js)
        np.testing.assert_allclose(fm.matrix, fm.matrix.T, atol=1e-10)
