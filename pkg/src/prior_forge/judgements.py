"""Dirichlet model of expert probability judgements.

An expert's probability vector p over a partition is modeled as
Dirichlet-distributed around the model's prior predictive probabilities
P with concentration α:

    p | α, λ ~ D(α, [P_{A_1|λ} ⋯ P_{A_n|λ}]),

so the log-density is log Γ(α) − Σ log Γ(α P_i) + Σ (α P_i − 1) log p_i.
Judgements at several covariate sets multiply (conditional independence),
giving a likelihood for (α, λ).  The concentration has the closed-form
maximum-likelihood approximation

    α̂ ≈ (Σ_j n_j/2 − J/2) / Σ_j KL(P_j ‖ p_j),

which doubles as the model-fit diagnostic: the better the fitted prior
predictive reproduces the judgements, the smaller the divergence and the
larger α̂.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, psi

from .errors import (AllZeroChips, DegenerateJudgement, LengthMismatch,
                     NonIncreasingThresholds, NonPositiveAlpha, NotOnSimplex,
                     PriorForgeError)
from .partition import Bin, CovariateSet, Partition
from .predictive import BinProbabilities, bin_probabilities
from .rng import substream

EPS_FLOOR = 1e-9        # floor applied to user-entered zero probabilities
SUM_TOL = 1e-9          # pre-floor deviation allowed from Σp = 1
ALPHA_MAX = 1e8         # cap standing in for "judgements reproduced exactly"
ALPHA_MIN = 1e-3

# Fixed cumulative levels of the quantile elicitation protocol and the
# bin probabilities they induce on the 6-bin threshold partition.
QUANTILE_LEVELS = (0.10, 0.25, 0.50, 0.75, 0.90)
QUANTILE_PROBS = (0.10, 0.15, 0.25, 0.25, 0.15, 0.10)


@dataclass(frozen=True)
class Judgement:
    """One probability vector on one partition at one covariate set."""

    p: np.ndarray
    partition: Partition
    covariate: CovariateSet = field(default_factory=CovariateSet)
    floored: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @property
    def size(self) -> int:
        return self.p.size

    def to_json(self) -> dict:
        return {"p": [float(v) for v in self.p],
                "partition": self.partition.to_json(),
                "covariate": self.covariate.to_json(),
                "floored": self.floored}


def make_judgement(p: Sequence[float], partition: Partition,
                   covariate: CovariateSet | None = None) -> Judgement:
    """Validate and normalize one judgement vector.

    The vector must sum to 1 within SUM_TOL before flooring; entered
    zeros (empty roulette bins) are lifted to EPS_FLOOR and the vector
    renormalized, with the deviation recorded on the judgement.
    """
    vec = np.asarray(p, dtype=float)
    if vec.size != partition.size:
        raise LengthMismatch(
            f"judgement has {vec.size} entries for a {partition.size}-bin partition")
    if vec.size < 2:
        raise DegenerateJudgement("judgements need at least 2 bins")
    if np.any(vec < 0) or not np.all(np.isfinite(vec)):
        raise NotOnSimplex(f"probabilities must be finite and nonnegative: {vec}")
    if abs(float(vec.sum()) - 1.0) > SUM_TOL:
        raise NotOnSimplex(f"probabilities sum to {vec.sum()}, not 1")
    floored = bool(np.any(vec < EPS_FLOOR))
    if floored:
        vec = np.maximum(vec, EPS_FLOOR)
    vec = vec / vec.sum()
    return Judgement(vec, partition, covariate or CovariateSet(), floored)


@dataclass(frozen=True)
class JudgementSet:
    """All judgements of one expert, one entry per covariate set."""

    items: tuple[Judgement, ...]
    expert: str = ""
    timestamp: str = ""

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise DegenerateJudgement("judgement set is empty")

    @property
    def n_covariates(self) -> int:
        return len(self.items)

    def to_json(self) -> dict:
        return {"expert": self.expert, "timestamp": self.timestamp,
                "judgements": [it.to_json() for it in self.items]}

    @classmethod
    def from_json(cls, doc: dict) -> "JudgementSet":
        items = []
        for j in doc.get("judgements", []):
            cov = CovariateSet.from_json(j.get("covariate", {}))
            if "thresholds" in j:
                support = j.get("support")
                items.append(quantile_judgement(
                    j["thresholds"], covariate=cov,
                    levels=tuple(j.get("levels") or QUANTILE_LEVELS),
                    support=tuple(support) if support else (0.0, np.inf)))
                continue
            part = Partition.from_json(j["partition"])
            if "chips" in j:
                items.append(make_judgement(chips_to_probabilities(j["chips"]),
                                            part, cov))
            else:
                items.append(make_judgement(j["p"], part, cov))
        return cls(tuple(items), expert=doc.get("expert", ""),
                   timestamp=doc.get("timestamp", ""))


# ---------------------------------------------------------------------------
# Elicitation-form converters


def chips_to_probabilities(chips: Sequence[float]) -> np.ndarray:
    """Roulette chips to probabilities: p_i = c_i / Σ c."""
    arr = np.asarray(chips, dtype=float)
    if np.any(arr < 0) or np.any(arr != np.floor(arr)):
        raise PriorForgeError(f"chip counts must be nonnegative integers: {chips}")
    total = arr.sum()
    if total == 0:
        raise AllZeroChips("place at least one chip")
    return arr / total


def quantile_judgement(thresholds: Sequence[float],
                       covariate: CovariateSet | None = None,
                       levels: Sequence[float] = QUANTILE_LEVELS,
                       support: tuple[float, float] = (0.0, np.inf)) -> Judgement:
    """Thresholds at fixed cumulative levels → judgement on the threshold bins.

    Thresholds y_1 < … < y_k at levels ℓ_1 < … < ℓ_k yield k+1 bins
    (support_lo, y_1], …, (y_k, support_hi] with probabilities
    (ℓ_1, ℓ_2−ℓ_1, …, 1−ℓ_k).
    """
    ys = [float(v) for v in thresholds]
    if len(ys) != len(levels):
        raise LengthMismatch(f"{len(ys)} thresholds for {len(levels)} levels")
    if any(b <= a for a, b in zip(ys, ys[1:])):
        raise NonIncreasingThresholds(f"thresholds must strictly increase: {ys}")
    lo, hi = support
    if ys[0] <= lo or (np.isfinite(hi) and ys[-1] >= hi):
        raise PriorForgeError(f"thresholds must lie inside the support ({lo}, {hi})")
    edges = [lo] + ys + [hi]
    bins = tuple(Bin((a,), (b,)) for a, b in zip(edges[:-1], edges[1:]))
    lv = list(levels)
    p = np.diff([0.0] + lv + [1.0])
    return make_judgement(p, Partition(bins=bins), covariate)


# ---------------------------------------------------------------------------
# Densities and divergences


def _prob_values(P) -> np.ndarray:
    if isinstance(P, BinProbabilities):
        return P.floored()
    return np.clip(np.asarray(P, dtype=float), 1e-12, 1.0)


def dirichlet_logpdf(p: Sequence[float], alpha: float, P) -> float:
    """log D(p | α, P); P may be a BinProbabilities or a plain vector."""
    if alpha <= 0 or not np.isfinite(alpha):
        raise NonPositiveAlpha(f"alpha must be positive and finite, got {alpha}")
    pv = np.asarray(p, dtype=float)
    Pv = _prob_values(P)
    if pv.size != Pv.size:
        raise LengthMismatch(f"p has {pv.size} entries, P has {Pv.size}")
    if np.any(pv <= 0) or np.any(pv >= 1):
        raise NotOnSimplex("p must lie strictly inside the simplex")
    a = alpha * Pv
    return float(gammaln(alpha) - gammaln(a).sum() + ((a - 1.0) * np.log(pv)).sum())


def dirichlet_score_p(p: np.ndarray, alpha: float, Pv: np.ndarray) -> np.ndarray:
    """∂ log D / ∂P_i = α (log p_i − ψ(α P_i))."""
    return alpha * (np.log(p) - psi(alpha * Pv))


def kl_divergence(P: Sequence[float], p: Sequence[float]) -> float:
    """KL(P ‖ p) = Σ P_i log(P_i / p_i), with 0·log 0 = 0."""
    Pv = np.asarray(P, dtype=float)
    pv = np.asarray(p, dtype=float)
    if Pv.size != pv.size:
        raise LengthMismatch(f"P has {Pv.size} entries, p has {pv.size}")
    if np.any(pv <= 0):
        raise NotOnSimplex("p must be strictly positive")
    if np.any(Pv < 0):
        raise PriorForgeError("P entries must be nonnegative")
    mask = Pv > 0
    return float(np.sum(Pv[mask] * np.log(Pv[mask] / pv[mask])))


@dataclass(frozen=True)
class ConcentrationEstimate:
    """Closed-form α̂ with its divergence and cap flag."""

    alpha_hat: float
    kl_total: float
    capped: bool

    def to_json(self) -> dict:
        return {"alpha_hat": float(self.alpha_hat),
                "kl_total": float(self.kl_total),
                "capped": bool(self.capped)}


def derive_seed(seed: int, index: int) -> int:
    """Per-covariate 64-bit seed derived from the session seed."""
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def predictive_per_judgement(judgements: JudgementSet, lam, model,
                             want_jacobian: bool = False, seed: int = 0,
                             draws: int = 4096) -> list[BinProbabilities]:
    """Model bin probabilities aligned with each judgement, per-j seeds."""
    out = []
    for j, item in enumerate(judgements.items):
        out.append(bin_probabilities(model, lam, item.covariate, item.partition,
                                     want_jacobian=want_jacobian,
                                     seed=derive_seed(seed, j), draws=draws))
    return out


def joint_loglik(judgements: JudgementSet, alpha: float, lam, model,
                 seed: int = 0, draws: int = 4096,
                 probabilities: list[BinProbabilities] | None = None) -> float:
    """Σ_j log D(p_j | α, P_{·|λ,x_j}); one shared α across covariate sets."""
    probs = probabilities if probabilities is not None else \
        predictive_per_judgement(judgements, lam, model, seed=seed, draws=draws)
    total = 0.0
    for item, P in zip(judgements.items, probs):
        total += dirichlet_logpdf(item.p, alpha, P)
    return total


def alpha_hat(judgements: JudgementSet, lam=None, model=None, seed: int = 0,
              draws: int = 4096,
              probabilities: list[BinProbabilities] | None = None) -> ConcentrationEstimate:
    """Closed-form α̂ = (Σ_j n_j/2 − J/2) / Σ_j KL(P_j ‖ p_j), capped at ALPHA_MAX."""
    numer = sum(it.size for it in judgements.items) / 2.0 - judgements.n_covariates / 2.0
    if numer <= 0:
        raise DegenerateJudgement("all judgements are single-bin; α̂ undefined")
    probs = probabilities if probabilities is not None else \
        predictive_per_judgement(judgements, lam, model, seed=seed, draws=draws)
    kl_total = sum(kl_divergence(_prob_values(P), it.p)
                   for it, P in zip(judgements.items, probs))
    if kl_total <= numer / ALPHA_MAX:
        return ConcentrationEstimate(ALPHA_MAX, kl_total, True)
    return ConcentrationEstimate(numer / kl_total, kl_total, False)


def exact_alpha_mle(judgements: JudgementSet, lam=None, model=None,
                    seed: int = 0, draws: int = 4096,
                    probabilities: list[BinProbabilities] | None = None,
                    tol: float = 1e-10) -> float:
    """1-D maximum-likelihood α by golden-section search in log α.

    The likelihood is evaluated at fixed λ (fixed P_j), which makes this
    both the α-refinement step of the alternating optimizer and the
    reference the closed-form approximation is judged against.
    """
    probs = probabilities if probabilities is not None else \
        predictive_per_judgement(judgements, lam, model, seed=seed, draws=draws)
    Pv = [(_prob_values(P), it.p) for it, P in zip(judgements.items, probs)]

    def negloglik(log_a: float) -> float:
        a = float(np.exp(log_a))
        return -sum(gammaln(a) - gammaln(a * P).sum() + ((a * P - 1.0) * np.log(p)).sum()
                    for P, p in Pv)

    lo, hi = np.log(ALPHA_MIN), np.log(ALPHA_MAX)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = negloglik(c), negloglik(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = negloglik(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = negloglik(d)
    return float(np.exp(0.5 * (lo + hi)))


def sample_judgements(alpha: float, lam, model, partitions: Sequence[Partition],
                      covariates: Sequence[CovariateSet], seed: int = 0,
                      draws: int = 4096, expert: str = "synthetic") -> JudgementSet:
    """Draw p_j ~ D(α, P_j) via normalized Gamma(α P_i, 1) variables."""
    if alpha <= 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha}")
    if len(partitions) != len(covariates):
        raise LengthMismatch("one partition per covariate set required")
    items = []
    for j, (part, cov) in enumerate(zip(partitions, covariates)):
        P = bin_probabilities(model, lam, cov, part,
                              seed=derive_seed(seed, j), draws=draws)
        g = substream(seed, j).gamma(shape=alpha * P.floored())
        total = g.sum()
        if total <= 0:        # all shapes microscopic; spread evenly
            g = np.ones_like(g)
            total = g.sum()
        items.append(make_judgement(g / total, part, cov))
    return JudgementSet(tuple(items), expert=expert)
