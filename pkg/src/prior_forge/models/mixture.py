"""Gaussian mixture prior over a Gaussian observation model.

Observation Y|θ ~ N(θ, σ²) with θ drawn from a K-component Gaussian
mixture prior gives the closed-form prior predictive

    Y ~ Σ_k w_k N(μ_k, σ² + σ_k²),

so bin probabilities on (a, b] are differences of normal CDFs and every
hyperparameter derivative is a sum of normal pdf terms.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from ..errors import NonPositiveVariance, PriorForgeError
from ..partition import CovariateSet, Partition
from ..predictive import BinProbabilities, GenerativeModel
from ..transforms import HyperParams, TransformBlock, TransformSpec

_SQRT2PI = np.sqrt(2.0 * np.pi)


def _phi_terms(z: np.ndarray):
    """(Φ(z), φ(z), z·φ(z)) with ±inf edges mapped to their limits."""
    with np.errstate(over="ignore", invalid="ignore"):
        cdf = ndtr(z)
        pdf = np.where(np.isinf(z), 0.0, np.exp(-0.5 * z * z) / _SQRT2PI)
        zpdf = np.where(np.isinf(z), 0.0, z * pdf)
    return cdf, pdf, zpdf


class GaussianMixtureModel(GenerativeModel):
    """K-component mixture prior (K fixed per instance; default 2)."""

    name = "gaussian-mixture"
    outcome_dim = 1
    stochastic = False

    def __init__(self, n_components: int = 2):
        if n_components < 1:
            raise PriorForgeError("need at least one component")
        self.n_components = n_components

    # -- hyperparameters ----------------------------------------------------

    def hyperparam_spec(self) -> TransformSpec:
        K = self.n_components
        return TransformSpec((
            TransformBlock("identity", tuple(f"mu{k+1}" for k in range(K))),
            TransformBlock("log", ("sigma_sq",)),
            TransformBlock("log", tuple(f"sigma{k+1}_sq" for k in range(K))),
            TransformBlock("simplex", tuple(f"w{k+1}" for k in range(K))),
        ))

    def default_hyperparams(self) -> HyperParams:
        K = self.n_components
        mus = np.linspace(-2.0, 2.0, K) if K > 1 else np.zeros(1)
        vec = np.concatenate([mus, [1.0], np.ones(K), np.full(K, 1.0 / K)])
        return HyperParams(self.hyperparam_spec(), vec)

    def _unpack(self, lam: HyperParams):
        K = self.n_components
        v = lam.constrained
        mu, s2, cs2, w = v[:K], v[K], v[K + 1:2 * K + 1], v[2 * K + 1:]
        if s2 <= 0 or np.any(cs2 <= 0):
            raise NonPositiveVariance("mixture variances must be positive")
        return mu, s2, cs2, w

    def canonicalize(self, lam: HyperParams) -> HyperParams:
        """Identifiability conventions: sorted means, equal-share σ² split.

        The predictive only sees the totals σ² + σ_k², so the share kept
        in σ² is a likelihood ridge; it is pinned to half the mean total
        (clamped away from exhausting the smallest component).  Both fix-ups
        leave every bin probability unchanged.
        """
        mu, s2, cs2, w = self._unpack(lam)
        order = np.argsort(mu, kind="stable")
        mu, cs2, w = mu[order], cs2[order], w[order]
        totals = s2 + cs2
        share = min(float(totals.mean()) / 2.0, 0.95 * float(totals.min()))
        vec = np.concatenate([mu, [share], totals - share, w])
        return HyperParams(lam.spec, vec)

    # -- predictive ----------------------------------------------------------

    def component_sds(self, lam: HyperParams) -> np.ndarray:
        _, s2, cs2, _ = self._unpack(lam)
        return np.sqrt(s2 + cs2)

    def predictive_cdf(self, lam: HyperParams, x: CovariateSet,
                       point: np.ndarray, seed: int = 0,
                       draws: int = 4096) -> float:
        mu, _, _, w = self._unpack(lam)
        sd = self.component_sds(lam)
        y = float(np.asarray(point).reshape(-1)[0])
        if np.isposinf(y):
            return 1.0
        if np.isneginf(y):
            return 0.0
        return float(np.sum(w * ndtr((y - mu) / sd)))

    def predictive_density(self, lam: HyperParams, y: np.ndarray) -> np.ndarray:
        mu, _, _, w = self._unpack(lam)
        sd = self.component_sds(lam)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        z = (y[:, None] - mu[None, :]) / sd[None, :]
        return (w[None, :] * np.exp(-0.5 * z * z) / (_SQRT2PI * sd[None, :])).sum(axis=1)

    def bin_probabilities(self, lam: HyperParams, x: CovariateSet,
                          partition: Partition, want_jacobian: bool = False,
                          seed: int = 0, draws: int = 4096) -> BinProbabilities:
        if partition.discrete_support:
            raise PriorForgeError("mixture predictive is continuous; use interval bins")
        mu, s2, cs2, w = self._unpack(lam)
        sd = self.component_sds(lam)
        K = self.n_components
        lo = np.array([b.lower[0] for b in partition.bins])
        hi = np.array([b.upper[0] for b in partition.bins])

        with np.errstate(invalid="ignore"):
            za = (lo[:, None] - mu[None, :]) / sd[None, :]
            zb = (hi[:, None] - mu[None, :]) / sd[None, :]
        za = np.where(np.isinf(lo)[:, None], lo[:, None], za)
        zb = np.where(np.isinf(hi)[:, None], hi[:, None], zb)
        Fa, fa, zfa = _phi_terms(za)
        Fb, fb, zfb = _phi_terms(zb)

        comp = Fb - Fa                      # n × K CDF differences
        values = comp @ w
        if not want_jacobian:
            return BinProbabilities(values)

        jac = np.zeros((len(partition.bins), 3 * K + 1))
        jac[:, :K] = w[None, :] * (fa - fb) / sd[None, :]            # d/dμ_k
        dvar = w[None, :] * (zfa - zfb) / (2.0 * sd[None, :] ** 2)   # d/ds_k²
        jac[:, K] = dvar.sum(axis=1)                                 # shared σ²
        jac[:, K + 1:2 * K + 1] = dvar                               # σ_k²
        jac[:, 2 * K + 1:] = comp                                    # w_k
        return BinProbabilities(values, jacobian=jac)

    # -- optimization support -------------------------------------------------

    def initial_hyperparams(self, judgements) -> HyperParams:
        """Moment-match the judged predictive.

        Means split by conditional means on each side of the overall mean
        (the σ²/σ_k² decomposition is not identified by the predictive, so
        the residual within-variance is split evenly across σ² and the
        component variances by convention).
        """
        j = judgements.items[0]
        mids, widths = [], []
        for b in j.partition.bins:
            lo, hi = b.lower[0], b.upper[0]
            if np.isfinite(lo) and np.isfinite(hi):
                mids.append(0.5 * (lo + hi))
                widths.append(hi - lo)
            else:
                mids.append(np.nan)
        fallback = np.mean(widths) if widths else 1.0
        for i, b in enumerate(j.partition.bins):
            if np.isnan(mids[i]):
                lo, hi = b.lower[0], b.upper[0]
                mids[i] = hi - fallback if np.isinf(lo) else lo + fallback
        mids = np.asarray(mids)
        p = j.p
        m = float(p @ mids)
        v = max(float(p @ (mids - m) ** 2), 1e-2)
        K = self.n_components
        if K == 2:
            # Split the judged mass at its mean: group masses seed the
            # weights, conditional means seed the component means.
            below = mids <= m
            w1 = float(np.clip(p[below].sum(), 0.05, 0.95))
            mu1 = float(p[below] @ mids[below] / w1) if p[below].sum() > 0 else m - 1.0
            mu2 = (float(p[~below] @ mids[~below] / (1.0 - w1))
                   if p[~below].sum() > 0 else m + 1.0)
            mus, ws = np.array([mu1, mu2]), np.array([w1, 1.0 - w1])
        else:
            sd = np.sqrt(v)
            mus = m + sd * np.linspace(-1.0, 1.0, K) if K > 1 else np.array([m])
            ws = np.full(K, 1.0 / K)
        v_between = float(ws @ (mus - m) ** 2)
        v_within = max(v - v_between, 0.1 * v)
        vec = np.concatenate([mus, [v_within / 2.0], np.full(K, v_within / 2.0),
                              ws])
        return HyperParams(self.hyperparam_spec(), vec)


def fig1_hyperparams(model: GaussianMixtureModel | None = None) -> HyperParams:
    """The two-component illustration fixture: μ = ∓2, unit variances, equal weights."""
    model = model or GaussianMixtureModel(2)
    if model.n_components != 2:
        raise PriorForgeError("fixture is for the 2-component model")
    return HyperParams(model.hyperparam_spec(),
                       np.array([-2.0, 2.0, 1.0, 1.0, 1.0, 0.5, 0.5]))
