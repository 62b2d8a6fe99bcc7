"""Reparametrized Monte Carlo estimates of bin probabilities.

For models whose prior predictive has no closed form, bin probabilities
are expectations of conditional rectangle probabilities over the prior.
Each prior layer is rewritten through a pivotal quantity whose
distribution is free of the hyperparameters, so the expectation becomes
an average over fixed base draws and hyperparameter gradients pass
through the transform (pathwise derivatives).

Layers either provide the inverse pivotal map and its parameter
derivatives in closed form (Gaussian, log-normal) or, when no tractable
pivot exists, standardize through their CDF and recover the derivative
implicitly:  with T(θ; η) the CDF and X = T(θ; η) the (uniform) pivot,
total differentiation of X = T(T⁻¹(X; η); η) gives

    dθ/dη = − (∂T/∂θ)⁻¹ · ∂T/∂η,

which only needs the density and the CDF's parameter sensitivity
(the Gamma layer below).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, gammaln

from .errors import MCBudgetExceeded, NonFiniteDraw
from .rng import substream

_UNIFORM_CLIP = 1e-10   # keeps Gamma quantiles finite and densities positive


class PriorLayer(ABC):
    """One prior layer θ_name ~ π(· | hyperparameters)."""

    name: str
    param_names: tuple[str, ...]

    @abstractmethod
    def draw_base(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Hyperparameter-free base draws (the pivotal quantities)."""

    @abstractmethod
    def value(self, base: np.ndarray, params: dict[str, float]) -> np.ndarray:
        """θ draws from base draws."""

    @abstractmethod
    def partials(self, base: np.ndarray, theta: np.ndarray,
                 params: dict[str, float]) -> dict[str, np.ndarray]:
        """dθ/dη per consumed hyperparameter, evaluated per draw."""


@dataclass
class GaussianLayer(PriorLayer):
    """θ = μ + σ Z with Z ~ N(0,1); consumes (mean, variance)."""

    name: str
    mean_param: str
    var_param: str

    @property
    def param_names(self):
        return (self.mean_param, self.var_param)

    def draw_base(self, rng, n):
        return rng.standard_normal(n)

    def value(self, base, params):
        sd = np.sqrt(params[self.var_param])
        return params[self.mean_param] + sd * base

    def partials(self, base, theta, params):
        sd = np.sqrt(params[self.var_param])
        return {self.mean_param: np.ones_like(base),
                self.var_param: base / (2.0 * sd)}


@dataclass
class LogNormalLayer(PriorLayer):
    """θ = exp(a + √b Z); consumes the log-mean a and log-variance b."""

    name: str
    logmean_param: str
    logvar_param: str

    @property
    def param_names(self):
        return (self.logmean_param, self.logvar_param)

    def draw_base(self, rng, n):
        return rng.standard_normal(n)

    def value(self, base, params):
        root = np.sqrt(params[self.logvar_param])
        arg = params[self.logmean_param] + root * base
        # ±300 keeps downstream products (curve gaps × sensitivities) finite
        return np.exp(np.clip(arg, -300.0, 300.0))

    def partials(self, base, theta, params):
        root = np.sqrt(params[self.logvar_param])
        return {self.logmean_param: theta,
                self.logvar_param: theta * base / (2.0 * root)}


@dataclass
class GammaImplicitLayer(PriorLayer):
    """θ ~ Gamma(shape, scale) standardized through its CDF.

    The uniform pivot U = F(θ; shape, scale) has no closed-form inverse
    derivative in the shape, so dθ/dshape comes from the implicit rule;
    dθ/dscale = θ/scale follows from the scale family property.
    """

    name: str
    shape_param: str
    scale_param: str

    @property
    def param_names(self):
        return (self.shape_param, self.scale_param)

    def draw_base(self, rng, n):
        return np.clip(rng.uniform(size=n), _UNIFORM_CLIP, 1.0 - _UNIFORM_CLIP)

    @staticmethod
    def _clip(shape: float, scale: float) -> tuple[float, float]:
        # gammaincinv degrades outside this range; optimizer excursions
        # beyond it carry no statistical meaning anyway.
        return float(np.clip(shape, 1e-8, 1e8)), float(np.clip(scale, 1e-300, 1e300))

    def value(self, base, params):
        shape, scale = self._clip(params[self.shape_param],
                                  params[self.scale_param])
        return scale * gammaincinv(shape, base)

    def partials(self, base, theta, params):
        shape, scale = self._clip(params[self.shape_param],
                                  params[self.scale_param])
        x = theta / scale
        logpdf = (shape - 1.0) * np.log(x) - x - gammaln(shape) - np.log(scale)
        pdf = np.exp(np.clip(logpdf, -690.0, 690.0))
        h = 1e-6 * max(1.0, abs(shape))
        dF_dshape = (gammainc(shape + h, x) - gammainc(shape - h, x)) / (2.0 * h)
        dtheta_dshape = -dF_dshape / np.maximum(pdf, 1e-300)
        return {self.shape_param: dtheta_dshape,
                self.scale_param: theta / scale}


@dataclass
class ReparamDraws:
    """Base draws plus transformed latents for a fixed hyperparameter point."""

    latents: dict[str, np.ndarray]
    partials: dict[str, dict[str, np.ndarray]]   # layer name -> param -> dθ/dη
    n: int


def draw_layers(layers: list[PriorLayer], params: dict[str, float],
                seed: int, draws: int, want_partials: bool = True,
                base: dict[str, np.ndarray] | None = None,
                max_redraws: int = 3) -> tuple[ReparamDraws, dict[str, np.ndarray]]:
    """Draw every layer's base stream and transform it at ``params``.

    Returns the transformed draws and the base draws so callers can hold
    the base fixed across hyperparameter evaluations (common random
    numbers).  Non-finite transformed draws are re-drawn a bounded number
    of times; persistent non-finiteness raises MCBudgetExceeded.
    """
    if base is None:
        base = {layer.name: layer.draw_base(substream(seed, i), draws)
                for i, layer in enumerate(layers)}
    latents: dict[str, np.ndarray] = {}
    parts: dict[str, dict[str, np.ndarray]] = {}
    for i, layer in enumerate(layers):
        b = base[layer.name]
        theta = layer.value(b, params)
        bad = ~np.isfinite(theta)
        tries = 0
        while bad.any():
            if tries >= max_redraws:
                raise MCBudgetExceeded(
                    f"layer {layer.name}: {int(bad.sum())} non-finite draws "
                    f"after {max_redraws} redraws")
            tries += 1
            fresh = layer.draw_base(substream(seed, i, 1000 + tries), draws)
            b = np.where(bad, fresh, b)
            theta = layer.value(b, params)
            bad = ~np.isfinite(theta)
        base[layer.name] = b
        latents[layer.name] = theta
        if want_partials:
            pl = layer.partials(b, theta, params)
            for key, arr in pl.items():
                if not np.all(np.isfinite(arr)):
                    raise NonFiniteDraw(f"layer {layer.name}: non-finite dθ/d{key}")
            parts[layer.name] = pl
    return ReparamDraws(latents, parts, draws), base


def reparam_bin_probability(layers: list[PriorLayer],
                            conditional_probability,
                            params: dict[str, float],
                            param_order: tuple[str, ...],
                            seed: int = 0, draws: int = 4096,
                            base: dict[str, np.ndarray] | None = None):
    """Monte Carlo estimate of E[P(Y ∈ A | θ)] with its pathwise gradient.

    ``conditional_probability(latents)`` must return per-draw conditional
    probabilities and, optionally, their sensitivities to each latent:
    (prob, {layer name: dprob/dθ}).  The gradient is ordered by
    ``param_order``; entries for hyperparameters no layer consumes are 0.

    Returns (estimate, gradient, standard_error).
    """
    drawn, _ = draw_layers(layers, params, seed, draws, base=base)
    prob, dprob = conditional_probability(drawn.latents)
    est = float(prob.mean())
    se = float(prob.std(ddof=1) / np.sqrt(drawn.n)) if drawn.n > 1 else 0.0
    grad = np.zeros(len(param_order))
    for layer in layers:
        sens = dprob.get(layer.name)
        if sens is None:
            continue
        for pname, dtheta in drawn.partials[layer.name].items():
            grad[param_order.index(pname)] += float((sens * dtheta).mean())
    return est, grad, se
