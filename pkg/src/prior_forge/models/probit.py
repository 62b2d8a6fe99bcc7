"""Probit-Bernoulli GLM with a multivariate Gaussian prior on the coefficients.

With θ ~ N_D(μ, Σ) and Y|θ ~ Bernoulli(Φ(xᵀθ)), marginalizing θ gives the
closed-form success probability

    p(x, λ) = Φ( xᵀμ / √(1 + xᵀ Σ x) ).

Σ is parametrized by the separation strategy Σ = diag(σ) R diag(σ), with
the σ_d² marginal variances and R a correlation matrix, so each piece has
its own unconstrained map.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from ..errors import DimensionMismatch, PriorForgeError
from ..partition import CovariateSet, Partition
from ..predictive import BinProbabilities, GenerativeModel
from ..transforms import (HyperParams, TransformBlock, TransformSpec,
                          _corr_unpack)

_SQRT2PI = np.sqrt(2.0 * np.pi)


class ProbitGLMModel(GenerativeModel):
    """Binary-outcome GLM; hyperparameters (μ, σ², R), M = 2D + D(D−1)/2."""

    name = "probit-glm"
    outcome_dim = 1
    stochastic = False

    def __init__(self, n_coefficients: int = 2):
        if n_coefficients < 1:
            raise PriorForgeError("need at least one coefficient")
        self.n_coefficients = n_coefficients

    def hyperparam_spec(self) -> TransformSpec:
        D = self.n_coefficients
        blocks = [
            TransformBlock("identity", tuple(f"mu{d+1}" for d in range(D))),
            TransformBlock("log", tuple(f"sigma{d+1}_sq" for d in range(D))),
        ]
        if D > 1:
            corr_names = tuple(f"r{a+1}{b+1}" for a in range(1, D) for b in range(a))
            blocks.append(TransformBlock("corr_cholesky", corr_names))
        return TransformSpec(tuple(blocks))

    def default_hyperparams(self) -> HyperParams:
        D = self.n_coefficients
        vec = np.concatenate([np.zeros(D), np.ones(D),
                              np.zeros(D * (D - 1) // 2)])
        return HyperParams(self.hyperparam_spec(), vec)

    def _unpack(self, lam: HyperParams):
        D = self.n_coefficients
        v = lam.constrained
        mu, s2, r = v[:D], v[D:2 * D], v[2 * D:]
        return mu, s2, r

    def correlation(self, lam: HyperParams) -> np.ndarray:
        _, _, r = self._unpack(lam)
        return _corr_unpack(r) if r.size else np.eye(self.n_coefficients)

    def covariance(self, lam: HyperParams) -> np.ndarray:
        _, s2, _ = self._unpack(lam)
        sd = np.sqrt(s2)
        return sd[:, None] * self.correlation(lam) * sd[None, :]

    # -- predictive ----------------------------------------------------------

    def success_probability(self, lam: HyperParams, x: CovariateSet,
                            want_jacobian: bool = False):
        """p(x, λ), optionally with d p / d constrained-λ."""
        mu, s2, _ = self._unpack(lam)
        xv = np.asarray(x.x, dtype=float)
        if xv.size != self.n_coefficients:
            raise DimensionMismatch(
                f"covariate has {xv.size} entries, model expects {self.n_coefficients}")
        R = self.correlation(lam)
        sd = np.sqrt(s2)
        u = sd * xv
        v = 1.0 + u @ R @ u
        t = xv @ mu
        q = t / np.sqrt(v)
        p = float(ndtr(q))
        if not want_jacobian:
            return p, None

        pdf = np.exp(-0.5 * q * q) / _SQRT2PI
        dq_dv = -0.5 * t * v ** -1.5
        grad = np.empty(lam.constrained.size)
        D = self.n_coefficients
        grad[:D] = pdf * xv / np.sqrt(v)
        Ru = R @ u
        dv_dsd = 2.0 * xv * Ru
        grad[D:2 * D] = pdf * dq_dv * dv_dsd / (2.0 * sd)
        k = 2 * D
        for a in range(1, D):
            for b in range(a):
                grad[k] = pdf * dq_dv * 2.0 * u[a] * u[b]
                k += 1
        return p, grad

    def bin_probabilities(self, lam: HyperParams, x: CovariateSet,
                          partition: Partition, want_jacobian: bool = False,
                          seed: int = 0, draws: int = 4096) -> BinProbabilities:
        if not partition.discrete_support:
            raise PriorForgeError("probit outcomes are {0,1}; use an atom partition")
        if set(partition.atoms) != {0.0, 1.0}:
            raise PriorForgeError("probit partition must enumerate the atoms {0, 1}")
        p, grad = self.success_probability(lam, x, want_jacobian=want_jacobian)
        values = np.array([p if a == 1.0 else 1.0 - p for a in partition.atoms])
        if not want_jacobian:
            return BinProbabilities(values)
        jac = np.stack([grad if a == 1.0 else -grad for a in partition.atoms])
        return BinProbabilities(values, jacobian=jac)

    def predictive_cdf(self, lam: HyperParams, x: CovariateSet,
                       point: np.ndarray, seed: int = 0,
                       draws: int = 4096) -> float:
        p, _ = self.success_probability(lam, x)
        y = float(np.asarray(point).reshape(-1)[0])
        if y < 0.0:
            return 0.0
        if y < 1.0:
            return 1.0 - p
        return 1.0

    def initial_hyperparams(self, judgements) -> HyperParams:
        return self.default_hyperparams()
