"""Prior predictive bin probabilities.

The engine needs, for every bin A of a partition, the probability the
generative model's prior predictive assigns to A, optionally with
derivatives with respect to every hyperparameter.  Models provide either
a closed-form implementation, a joint predictive CDF (from which
rectangle probabilities follow by the alternating-sign corner
expansion), or a Monte Carlo estimator.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (DimensionMismatch, JacobianUnavailable, NonFiniteCDF,
                     PriorForgeError)
from .partition import Bin, CovariateSet, Partition
from .transforms import HyperParams, TransformSpec

# Bin probabilities are clamped to this floor before entering Γ(α·P):
# Γ has a pole at 0 and judgement likelihoods must stay finite.
PROB_FLOOR = 1e-12

# Closed-form bin probabilities must sum to 1 within this tolerance;
# Monte Carlo backends are held to 3× their combined standard error.
SUM_TOL_CLOSED = 1e-10


@dataclass(frozen=True)
class BinProbabilities:
    """Per-bin prior predictive probabilities for one covariate set.

    ``jacobian`` (n × M) holds d values / d constrained-hyperparameter
    when requested and supported; ``estimator_sd`` carries per-bin Monte
    Carlo standard errors for stochastic backends.
    """

    values: np.ndarray
    jacobian: Optional[np.ndarray] = None
    estimator_sd: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if self.jacobian is not None:
            object.__setattr__(self, "jacobian", np.asarray(self.jacobian, dtype=float))
        if self.estimator_sd is not None:
            object.__setattr__(self, "estimator_sd", np.asarray(self.estimator_sd, dtype=float))

    @property
    def size(self) -> int:
        return self.values.size

    def floored(self) -> np.ndarray:
        """Values clamped to [PROB_FLOOR, 1 − PROB_FLOOR] for use inside
        Γ(α·P) and ψ′(α·P), which need strictly interior arguments."""
        return np.clip(self.values, PROB_FLOOR, 1.0 - PROB_FLOOR)

    def check_sum(self) -> None:
        total = float(self.values.sum())
        if self.estimator_sd is not None:
            tol = 3.0 * float(np.sqrt((self.estimator_sd ** 2).sum())) + SUM_TOL_CLOSED
        else:
            tol = SUM_TOL_CLOSED
        if abs(total - 1.0) > tol:
            raise PriorForgeError(f"bin probabilities sum to {total}, not 1 ± {tol}")


class GenerativeModel(ABC):
    """A generative model exposing prior predictive bin probabilities.

    Concrete models declare their hyperparameter layout and implement
    ``bin_probabilities``; models with a tractable joint predictive CDF
    also implement ``predictive_cdf`` so arbitrary rectangles can be
    evaluated through the corner expansion.
    """

    name: str = ""
    outcome_dim: int = 1
    stochastic: bool = False      # Monte Carlo backend?

    @abstractmethod
    def hyperparam_spec(self) -> TransformSpec:
        ...

    @abstractmethod
    def default_hyperparams(self) -> HyperParams:
        ...

    @abstractmethod
    def bin_probabilities(self, lam: HyperParams, x: CovariateSet,
                          partition: Partition, want_jacobian: bool = False,
                          seed: int = 0, draws: int = 4096) -> BinProbabilities:
        ...

    def predictive_cdf(self, lam: HyperParams, x: CovariateSet,
                       point: np.ndarray, seed: int = 0,
                       draws: int = 4096) -> float:
        raise NotImplementedError(f"{self.name} has no joint predictive CDF")

    def initial_hyperparams(self, judgements) -> HyperParams:
        """Moment-style starting point for optimization."""
        return self.default_hyperparams()

    def hyperparam_schema(self) -> dict:
        spec = self.hyperparam_spec()
        return {"model": self.name,
                "names": list(spec.names),
                "blocks": spec.to_json(),
                "defaults": self.default_hyperparams().to_json()["constrained"]}


def rectangle_probability(model: GenerativeModel, lam: HyperParams,
                          x: CovariateSet, bin: Bin, seed: int = 0,
                          draws: int = 4096) -> float:
    """P(Y ∈ ⨉(a_s, b_s]) via the corner expansion of the predictive CDF.

    The probability of a half-open rectangle equals the sum of the CDF
    over its 2^S corners, each corner signed by (−1)^{#lower edges used}.
    """
    S = bin.ndim
    if model.outcome_dim != S:
        raise DimensionMismatch(
            f"{model.name} has outcome dimension {model.outcome_dim}, bin is {S}-D")
    total = 0.0
    for picks in itertools.product((0, 1), repeat=S):
        corner = np.array([bin.upper[s] if picks[s] else bin.lower[s]
                           for s in range(S)])
        sign = -1.0 if (S - sum(picks)) % 2 else 1.0
        val = model.predictive_cdf(lam, x, corner, seed=seed, draws=draws)
        if math.isnan(val):
            raise NonFiniteCDF(f"CDF at {corner} is NaN")
        total += sign * val
    # Guard the inevitable cancellation noise at the float boundary.
    return float(min(1.0, max(0.0, total)))


def bin_probabilities(model: GenerativeModel, lam: HyperParams, x: CovariateSet,
                      partition: Partition, want_jacobian: bool = False,
                      seed: int = 0, draws: int = 4096) -> BinProbabilities:
    """Evaluate a whole partition through the model's preferred backend."""
    out = model.bin_probabilities(lam, x, partition, want_jacobian=want_jacobian,
                                  seed=seed, draws=draws)
    if want_jacobian and out.jacobian is None:
        raise JacobianUnavailable(f"{model.name} cannot provide derivatives")
    out.check_sum()
    return out
