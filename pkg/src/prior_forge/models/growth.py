"""Human-growth model: Weibull observations around a Preece-Baines curve.

Stature at age t is modeled as

    Y_t | θ, b ~ Weibull with E[Y_t | θ, b] = exp(h(t; θ)) and shape b,
    h(t; θ)    = h₁ − 2(h₁ − h_{t*}) / (exp[s₀(t − t*)] + exp[s₁(t − t*)]),

with independent log-normal priors on the five curve parameters
θ = (h₁, h_{t*}, t*, s₀, s₁) and a Gamma prior on the shape b.  The
hyperparameters are the twelve prior constants {a_m, b_m : m = 0..5}.

The Weibull is written in its mean parametrization: scale
exp(h)/Γ(1 + 1/b), so the curve enters the observation model through
exp(h).  Fit diagnostics report both h and exp(h) since judgement data
live on the exp(h) (outcome) scale.

Bin probabilities have no closed form; they are reparametrized Monte
Carlo averages of conditional Weibull CDF differences, with pathwise
hyperparameter gradients (standard-normal pivots for the log-normal
layers, an implicit CDF pivot for the Gamma layer).
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln, psi

from ..errors import PriorForgeError
from ..partition import CovariateSet, Partition
from ..predictive import BinProbabilities, GenerativeModel
from ..reparam import GammaImplicitLayer, LogNormalLayer, draw_layers
from ..rng import substream
from ..transforms import HyperParams, TransformBlock, TransformSpec

THETA_NAMES = ("h1", "h_tstar", "t_star", "s0", "s1")

# Reference curve values from fitting the growth model to real stature data,
# used as fixtures: (h1, h_tstar, t_star, s0, s1).
THETA_REFERENCE = (174.6, 162.9, 14.6, 0.1, 1.2)

_EXP_CLIP = 690.0


def growth_curve(t, theta):
    """h(t; θ) for θ rows (h1, h_tstar, t_star, s0, s1); vectorized over rows."""
    th = np.atleast_2d(np.asarray(theta, dtype=float))
    h1, ht, ts, s0, s1 = (th[:, i] for i in range(5))
    if np.any(s0 <= 0) or np.any(s1 <= 0):
        raise PriorForgeError("growth curve needs s0, s1 > 0")
    dt = np.asarray(t, dtype=float) - ts
    e0 = np.exp(np.clip(s0 * dt, -_EXP_CLIP, _EXP_CLIP))
    e1 = np.exp(np.clip(s1 * dt, -_EXP_CLIP, _EXP_CLIP))
    out = h1 - 2.0 * (h1 - ht) / (e0 + e1)
    return out if np.ndim(theta) > 1 else float(out[0])


def growth_curve_partials(t, theta):
    """(h, dh/dθ) with dh columns ordered like θ."""
    th = np.atleast_2d(np.asarray(theta, dtype=float))
    h1, ht, ts, s0, s1 = (th[:, i] for i in range(5))
    dt = np.asarray(t, dtype=float) - ts
    e0 = np.exp(np.clip(s0 * dt, -_EXP_CLIP, _EXP_CLIP))
    e1 = np.exp(np.clip(s1 * dt, -_EXP_CLIP, _EXP_CLIP))
    q = 1.0 / (e0 + e1)
    r0, r1 = e0 * q, e1 * q              # shares in [0, 1]; safe at huge e's
    gap = h1 - ht
    h = h1 - 2.0 * gap * q
    grad = np.stack([
        1.0 - 2.0 * q,                      # h1
        2.0 * q,                            # h_tstar
        -2.0 * gap * (s0 * r0 + s1 * r1) * q,   # t_star
        2.0 * gap * dt * r0 * q,            # s0
        2.0 * gap * dt * r1 * q,            # s1
    ], axis=1)
    return h, grad


def _weibull_cdf_terms(y: float, h: np.ndarray, b: np.ndarray,
                       log_gamma_term: np.ndarray, psi_term: np.ndarray,
                       want_partials: bool = True):
    """Per-draw (F(y), ∂F/∂h, ∂F/∂b) for the mean-parametrized Weibull.

    With z = (y Γ(1+1/b) e^{-h})^b:  F = 1 − e^{−z}, ∂F/∂h = −b z e^{−z},
    ∂F/∂b = z e^{−z} (ℓ − ψ(1+1/b)/b) where ℓ = log y + log Γ(1+1/b) − h.
    z e^{−z} is evaluated as exp(log z − z) to survive extreme z.
    """
    n = h.size
    if y <= 0.0:
        zero = np.zeros(n)
        return zero, zero, zero
    if np.isposinf(y):
        return np.ones(n), np.zeros(n), np.zeros(n)
    ell = np.log(y) + log_gamma_term - h
    logz = np.clip(b * ell, -_EXP_CLIP, _EXP_CLIP)
    z = np.exp(logz)
    F = -np.expm1(-z)
    if not want_partials:
        return F, None, None
    ze = np.exp(np.clip(logz - z, -_EXP_CLIP, _EXP_CLIP))   # z·e^{−z}
    dF_dh = -b * ze
    dF_db = ze * (ell - psi_term / b)
    return F, dF_dh, dF_db


class GrowthWeibullModel(GenerativeModel):
    """Growth-curve model with Monte Carlo prior predictive probabilities."""

    name = "growth-weibull"
    outcome_dim = 1
    stochastic = True

    def __init__(self):
        self.layers = [GammaImplicitLayer("b", "a0", "b0")] + [
            LogNormalLayer(THETA_NAMES[d], f"a{d+1}", f"b{d+1}")
            for d in range(5)
        ]

    def hyperparam_spec(self) -> TransformSpec:
        blocks = [TransformBlock("log", ("a0", "b0"))]
        for d in range(1, 6):
            blocks.append(TransformBlock("identity", (f"a{d}",)))
            blocks.append(TransformBlock("log", (f"b{d}",)))
        return TransformSpec(tuple(blocks))

    def default_hyperparams(self) -> HyperParams:
        # Prior medians on the outcome scale near the reference curve:
        # exp(h) in cm ⇒ curve values near log-stature.
        theta0 = np.array([5.20, 5.05, 14.0, 0.1, 1.0])
        flat = [4.0, 5.0]                    # b ~ Gamma(4, scale 5), mean 20
        for d in range(5):
            flat += [float(np.log(theta0[d])), 0.25]
        return HyperParams(self.hyperparam_spec(), np.asarray(flat))

    # -- Monte Carlo predictive ------------------------------------------------

    # Weibull shapes beyond this live where the conditional CDF is a
    # step function at Monte Carlo resolution: pathwise gradients need
    # far more than `draws` samples there, so draws are capped.  At the
    # cap the outcome noise is already below 1% of the mean.
    SHAPE_CAP = 200.0

    def _draws(self, lam: HyperParams, seed: int, draws: int,
               base: dict | None = None, want_partials: bool = False):
        params = lam.as_dict()
        drawn, base = draw_layers(self.layers, params, seed, draws, base=base,
                                  want_partials=want_partials)
        b = np.clip(drawn.latents["b"], 1e-6, self.SHAPE_CAP)
        theta = np.stack([drawn.latents[nm] for nm in THETA_NAMES], axis=1)
        return drawn, base, theta, b

    def bin_probabilities(self, lam: HyperParams, x: CovariateSet,
                          partition: Partition, want_jacobian: bool = False,
                          seed: int = 0, draws: int = 4096,
                          base: dict | None = None) -> BinProbabilities:
        if partition.discrete_support:
            raise PriorForgeError("growth outcomes are continuous statures")
        t = float(x.x[0]) if x.x else 0.0
        drawn, _, theta, b = self._draws(lam, seed, draws, base=base,
                                         want_partials=want_jacobian)
        if want_jacobian:
            h, dh = growth_curve_partials(t, theta)
        else:
            h = growth_curve(t, theta)
        log_gamma_term = gammaln(1.0 + 1.0 / b)
        psi_term = psi(1.0 + 1.0 / b)

        edges: dict[float, tuple] = {}
        for bn in partition.bins:
            for y in (bn.lower[0], bn.upper[0]):
                if y not in edges:
                    edges[y] = _weibull_cdf_terms(y, h, b, log_gamma_term,
                                                  psi_term,
                                                  want_partials=want_jacobian)

        n_bins = len(partition.bins)
        values = np.empty(n_bins)
        sds = np.empty(n_bins)
        per_bin_dh = []
        per_bin_db = []
        for i, bn in enumerate(partition.bins):
            Flo, dhlo, dblo = edges[bn.lower[0]]
            Fhi, dhhi, dbhi = edges[bn.upper[0]]
            diff = Fhi - Flo
            values[i] = diff.mean()
            sds[i] = diff.std(ddof=1) / np.sqrt(draws)
            if want_jacobian:
                per_bin_dh.append(dhhi - dhlo)
                per_bin_db.append(dbhi - dblo)

        if not want_jacobian:
            return BinProbabilities(values, estimator_sd=sds)

        names = lam.spec.names
        jac = np.zeros((n_bins, len(names)))
        parts = drawn.partials
        for i in range(n_bins):
            dP_dtheta = per_bin_dh[i][:, None] * dh       # draws × 5
            dP_db = per_bin_db[i]
            for d, nm in enumerate(THETA_NAMES):
                for pname, dt_dp in parts[nm].items():
                    jac[i, names.index(pname)] += float(
                        (dP_dtheta[:, d] * dt_dp).mean())
            for pname, db_dp in parts["b"].items():
                jac[i, names.index(pname)] += float((dP_db * db_dp).mean())
        return BinProbabilities(values, jacobian=jac, estimator_sd=sds)

    def predictive_cdf(self, lam: HyperParams, x: CovariateSet,
                       point: np.ndarray, seed: int = 0,
                       draws: int = 4096) -> float:
        t = float(x.x[0]) if x.x else 0.0
        _, _, theta, b = self._draws(lam, seed, draws)
        h = growth_curve(t, theta)
        F, _, _ = _weibull_cdf_terms(float(np.asarray(point).reshape(-1)[0]),
                                     h, b, gammaln(1.0 + 1.0 / b),
                                     psi(1.0 + 1.0 / b))
        return float(np.mean(F))

    def predictive_draws(self, lam: HyperParams, t: float, seed: int = 0,
                         draws: int = 4096) -> np.ndarray:
        """Outcome draws Y_t, for quantile and curve diagnostics."""
        _, _, theta, b = self._draws(lam, seed, draws)
        h = growth_curve(t, theta)
        e = substream(seed, 77).exponential(size=b.size)
        log_y = h - gammaln(1.0 + 1.0 / b) + np.log(np.maximum(e, 1e-300)) / b
        return np.exp(np.clip(log_y, -_EXP_CLIP, _EXP_CLIP))

    def curve_summary(self, lam: HyperParams, ages, seed: int = 0,
                      draws: int = 4096) -> dict:
        """Curve diagnostics on both scales: latent h and outcome exp(h).

        Medians, not means: heavy prior tails can push a handful of h
        draws to astronomically negative values that say nothing about
        the typical curve.
        """
        _, _, theta, b = self._draws(lam, seed, draws)
        rows = []
        for t in ages:
            h = growth_curve(float(t), theta)
            exp_h = np.exp(np.clip(h, -_EXP_CLIP, _EXP_CLIP))
            rows.append({"age": float(t),
                         "median_h": float(np.median(h)),
                         "median_exp_h": float(np.median(exp_h)),
                         "mean_exp_h": float(exp_h.mean())})
        return {"ages": rows}

    def prior_moments(self, lam: HyperParams) -> dict:
        """Prior mean/variance per parameter (log-normal θ_d, Gamma b)."""
        d = lam.as_dict()
        out = {}
        for i, nm in enumerate(THETA_NAMES, start=1):
            a, bv = d[f"a{i}"], d[f"b{i}"]
            mean = float(np.exp(a + bv / 2.0))
            var = float((np.exp(bv) - 1.0) * np.exp(2.0 * a + bv))
            out[nm] = {"mean": mean, "variance": var}
        out["b"] = {"mean": d["a0"] * d["b0"],
                    "variance": d["a0"] * d["b0"] ** 2}
        return out

    # -- optimization support ---------------------------------------------------

    def initial_hyperparams(self, judgements) -> HyperParams:
        """Start from the judged medians: prior medians track log(median stature)."""
        ages, logmed = [], []
        for item in judgements.items:
            med = _judged_median(item)
            if med is not None and med > 0:
                ages.append(float(item.covariate.x[0]) if item.covariate.x else 0.0)
                logmed.append(float(np.log(med)))
        if not ages:
            return self.default_hyperparams()
        order = np.argsort(ages)
        ages = np.asarray(ages)[order]
        logmed = np.asarray(logmed)[order]
        gmax = float(logmed.max())
        h1 = gmax + 0.02
        tstar = float(ages.min() + 0.8 * (ages.max() - ages.min())) or 10.0
        ht = float(np.interp(tstar, ages, logmed))
        ht = min(ht, h1 - 0.01)
        theta0 = np.clip([h1, ht, max(tstar, 1.0), 0.1, 1.0], 1e-3, None)
        flat = np.empty(12)
        flat[0], flat[1] = 4.0, 5.0
        for dd in range(5):
            flat[2 + 2 * dd] = np.log(theta0[dd])
            flat[3 + 2 * dd] = 0.25
        return HyperParams(self.hyperparam_spec(), flat)


def _judged_median(item) -> float | None:
    """Median implied by one judgement via linear interpolation of its CDF."""
    cum = 0.0
    for bn, pi in zip(item.partition.bins, item.p):
        lo, hi = bn.lower[0], bn.upper[0]
        if cum + pi >= 0.5:
            if np.isfinite(lo) and np.isfinite(hi):
                return lo + (0.5 - cum) / max(pi, 1e-12) * (hi - lo)
            return hi if np.isfinite(hi) else lo
        cum += pi
    return None
