"""Built-in generative models and the name-keyed registry."""

from __future__ import annotations

from ..errors import UnknownModel
from .growth import (THETA_REFERENCE, GrowthWeibullModel, growth_curve,
                     growth_curve_partials)
from .mixture import GaussianMixtureModel, fig1_hyperparams
from .probit import ProbitGLMModel

_FACTORIES = {
    "gaussian-mixture": GaussianMixtureModel,
    "probit-glm": ProbitGLMModel,
    "growth-weibull": GrowthWeibullModel,
}


def model_names() -> list[str]:
    return sorted(_FACTORIES)


def create_model(name: str, **kwargs):
    """Instantiate a registered model; structural options via kwargs
    (e.g. ``n_coefficients`` for probit-glm, ``n_components`` for the mixture)."""
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise UnknownModel(f"no model named {name!r}; known: {model_names()}") from None
    return factory(**kwargs)


__all__ = [
    "GaussianMixtureModel", "ProbitGLMModel", "GrowthWeibullModel",
    "growth_curve", "growth_curve_partials", "fig1_hyperparams",
    "THETA_REFERENCE", "create_model", "model_names",
]
