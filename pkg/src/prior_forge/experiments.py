"""Deterministic, seeded reproductions of the method's simulation studies.

Four studies, each emitting machine-readable rows:

* ``alpha-illustration`` — judgement vectors sampled at a ladder of
  concentrations around a fixed two-component mixture, showing how α
  controls how closely bars track the predictive curve.
* ``consistency`` — recovery of the mixture hyperparameters from a
  single judgement vector as the partition refines.  One fine judgement
  is sampled per seed and coarsened by block sums (Dirichlet
  aggregation), so the n-grid is maximally coupled while every
  coarsening keeps the exact Dirichlet law.
* ``glm-frobenius`` — covariance recovery error for the probit GLM as
  the number of judged covariate sets grows; covariate sets are nested
  across J for the same coupling reason.
* ``growth-protocol`` — end-to-end quantile-protocol fit of the growth
  model from threshold fixtures, reporting prior moments per parameter
  and the concentration diagnostic.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from . import __version__ as _pkg_version
from .errors import PriorForgeError
from .judgements import (JudgementSet, QUANTILE_LEVELS, make_judgement,
                         quantile_judgement, sample_judgements)
from .models import (GaussianMixtureModel, GrowthWeibullModel, ProbitGLMModel,
                     fig1_hyperparams, growth_curve)
from .models.growth import THETA_NAMES, THETA_REFERENCE
from .optimizers import OptimizerConfig, fit
from .partition import Bin, CovariateSet, Partition
from .rng import substream
from .transforms import HyperParams

EXPERIMENT_NAMES = ("alpha-illustration", "consistency", "glm-frobenius",
                    "growth-protocol")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    alphas: tuple[float, ...] = (1.0, 15.0, 50.0, 100.0, 300.0, 1000.0)
    ns: tuple[int, ...] = (5, 10, 20, 50, 100)
    ds: tuple[int, ...] = (2, 3, 4, 5, 6)
    js: tuple[int, ...] = (3, 5, 15, 30, 80)
    seeds: tuple[int, ...] = tuple(range(20))
    ages: tuple[float, ...] = (0.0, 2.5, 10.0, 17.5)
    sampling_alpha: float = 1000.0
    mc_draws: int = 4096
    fit_max_iterations: int = 200
    nm_max_evals: int = 4000
    growth_shape: float = 20.0      # Weibull shape of the threshold fixture
    thresholds: Optional[dict] = None   # age label -> list of 5 thresholds

    def __post_init__(self):
        if self.name not in EXPERIMENT_NAMES:
            raise PriorForgeError(
                f"unknown experiment {self.name!r}; known: {EXPERIMENT_NAMES}")
        if not self.seeds:
            raise PriorForgeError("experiment needs explicit seeds")

    def to_json(self) -> dict:
        doc = {k: getattr(self, k) for k in self.__dataclass_fields__}
        for k, v in doc.items():
            if isinstance(v, tuple):
                doc[k] = list(v)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentSpec":
        known = {}
        for k, v in doc.items():
            if k not in cls.__dataclass_fields__:
                continue
            if isinstance(v, list):
                v = tuple(v)
            known[k] = v
        return cls(**known)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[dict]
    metadata: dict

    def to_json(self) -> dict:
        return {"name": self.name, "columns": self.columns,
                "rows": self.rows, "metadata": self.metadata}

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, indent=2).encode()

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row.get(k, "") for k in self.columns})
        return buf.getvalue().encode()


def _metadata(spec: ExperimentSpec) -> dict:
    import numpy
    import scipy
    return {"config_hash": spec.config_hash(),
            "spec": spec.to_json(),
            "versions": {"prior_forge": _pkg_version,
                         "numpy": numpy.__version__,
                         "scipy": scipy.__version__}}


# ---------------------------------------------------------------------------
# Partition fixtures


def fig1_partition(edges_from: float = -6.0, edges_to: float = 6.0,
                   n_bins: int = 10) -> Partition:
    """Equal-width interior bins plus two tails; the illustration fixture."""
    edges = np.linspace(edges_from, edges_to, n_bins - 1)
    return _partition_from_edges(edges)


def _partition_from_edges(edges: Sequence[float],
                          lo: float = -np.inf, hi: float = np.inf) -> Partition:
    full = [lo] + [float(e) for e in edges] + [hi]
    return Partition(bins=tuple(Bin((a,), (b,)) for a, b in zip(full[:-1], full[1:])))


def equal_mass_partition(model, lam: HyperParams, n: int,
                         x: CovariateSet | None = None,
                         bracket: tuple[float, float] = (-60.0, 60.0)) -> Partition:
    """Bins at predictive quantiles k/n, so every bin carries mass 1/n."""
    x = x or CovariateSet()
    cdf = lambda y: model.predictive_cdf(lam, x, np.array([y]))
    edges = [brentq(lambda y, q=k / n: cdf(y) - q, *bracket, xtol=1e-12)
             for k in range(1, n)]
    return _partition_from_edges(edges)


# ---------------------------------------------------------------------------
# alpha-illustration


def run_alpha_illustration(spec: ExperimentSpec) -> ExperimentResult:
    model = GaussianMixtureModel(2)
    lam = fig1_hyperparams(model)
    partition = fig1_partition()
    exact = model.bin_probabilities(lam, CovariateSet(), partition).values
    rows = []
    for alpha in spec.alphas:
        for seed in spec.seeds:
            js = sample_judgements(alpha, lam, model, [partition],
                                   [CovariateSet(label="fig1")], seed=seed)
            p = js.items[0].p
            for i in range(partition.size):
                rows.append({"alpha": float(alpha), "seed": int(seed),
                             "bin": i, "metric": "sampled_p",
                             "value": float(p[i]), "exact_p": float(exact[i])})
    return ExperimentResult("alpha-illustration",
                            ["alpha", "seed", "bin", "metric", "value", "exact_p"],
                            rows, _metadata(spec))


# ---------------------------------------------------------------------------
# consistency (partition refinement)


def _coarsen(p: np.ndarray, factor: int) -> np.ndarray:
    return p.reshape(-1, factor).sum(axis=1)


def consistency_hyperparams(model: GaussianMixtureModel) -> HyperParams:
    """True hyperparameters of the refinement study.

    Separated components with moderate, equal variance shares keep every
    coordinate estimable from a single α=1000 judgement vector (the
    σ²/σ_k² decomposition is a likelihood ridge, so the shares themselves
    are convention-limited; the equal split matches the start heuristic's
    convention).
    """
    return HyperParams(model.hyperparam_spec(),
                       np.array([-2.5, 2.5, 0.5, 0.5, 0.5, 0.4, 0.6]))


def run_consistency(spec: ExperimentSpec) -> ExperimentResult:
    model = GaussianMixtureModel(2)
    lam0 = consistency_hyperparams(model)
    u0 = lam0.unconstrained()
    names = lam0.spec.unconstrained_names
    n_max = max(spec.ns)
    for n in spec.ns:
        if n_max % n:
            raise PriorForgeError(
                f"partition sizes must divide {n_max} for nested coarsening; got {n}")
    part_max = equal_mass_partition(model, lam0, n_max)
    edges_max = [b.upper[0] for b in part_max.bins[:-1]]
    grid = np.linspace(-8.0, 8.0, 321)
    cdf0 = np.array([model.predictive_cdf(lam0, CovariateSet(), np.array([y]))
                     for y in grid])

    cfg = OptimizerConfig(method="natural-gradient",
                          fix_alpha=spec.sampling_alpha,
                          max_iterations=spec.fit_max_iterations)
    rows = []
    for seed in spec.seeds:
        js_fine = sample_judgements(spec.sampling_alpha, lam0, model,
                                    [part_max], [CovariateSet(label="fine")],
                                    seed=seed)
        p_fine = js_fine.items[0].p
        for n in sorted(spec.ns):
            factor = n_max // n
            p_n = _coarsen(p_fine, factor)
            edges_n = edges_max[factor - 1::factor]
            part_n = _partition_from_edges(edges_n)
            js = JudgementSet((make_judgement(p_n, part_n, CovariateSet(label=f"n={n}")),))
            result = fit(js, model, cfg)
            u_hat = result.lambda_hat.unconstrained()
            err = np.abs(u_hat - u0)
            for name, e in zip(names, err):
                rows.append({"n": n, "seed": int(seed),
                             "metric": f"abs_error[{name}]", "value": float(e)})
            rows.append({"n": n, "seed": int(seed),
                         "metric": "mean_abs_error", "value": float(err.mean())})
            cdf_hat = np.array([model.predictive_cdf(result.lambda_hat,
                                                     CovariateSet(), np.array([y]))
                                for y in grid])
            rows.append({"n": n, "seed": int(seed), "metric": "cdf_sup_distance",
                         "value": float(np.max(np.abs(cdf_hat - cdf0)))})
    return ExperimentResult("consistency", ["n", "seed", "metric", "value"],
                            rows, _metadata(spec))


# ---------------------------------------------------------------------------
# glm-frobenius (covariance recovery for the probit GLM)


def _glm_truth(D: int) -> HyperParams:
    """One true hyperparameter draw per dimension, fixed across J and seeds."""
    rng = substream(918273, D)
    model = ProbitGLMModel(D)
    mu = rng.normal(0.0, 1.0, size=D)
    sigma_sq = rng.uniform(0.5, 1.5, size=D) ** 2
    z = rng.normal(0.0, 0.4, size=D * (D - 1) // 2)
    u = np.concatenate([mu, np.log(sigma_sq), z])
    return HyperParams.from_unconstrained(model.hyperparam_spec(), u)


def glm_covariate_design(D: int, seed: int, count: int) -> np.ndarray:
    """Nested elicitation design: scale ladders per axis, then mixed pairs.

    A single probit judgement at x only constrains Φ(xᵀμ/√(1+xᵀΣx)), so
    the same direction is asked at two magnitudes (pinning the mean and
    the variance along it), mixed directions pick up the correlations,
    and the remainder are random profiles.  Prefixes of this list form
    the nested J-grids, so estimates can only gain information as J grows.
    """
    rows = []
    for d in range(D):
        e = np.eye(D)[d]
        rows += [1.0 * e, 3.0 * e]
    for a in range(D):
        for b in range(a):
            v = np.zeros(D)
            v[a] = v[b] = 1.0 / np.sqrt(2.0)
            rows += [2.0 * v, 4.0 * v]
    rng = substream(555000 + seed, D)
    while len(rows) < count:
        rows.append(rng.normal(size=D) * 2.0)
    return np.stack(rows[:count])


def run_glm_frobenius(spec: ExperimentSpec) -> ExperimentResult:
    rows = []
    atoms = Partition(atoms=(0.0, 1.0))
    j_max = max(spec.js)
    for D in spec.ds:
        model = ProbitGLMModel(D)
        lam0 = _glm_truth(D)
        sigma0 = model.covariance(lam0)
        cfg = OptimizerConfig(method="natural-gradient",
                              fix_alpha=spec.sampling_alpha,
                              max_iterations=spec.fit_max_iterations)
        for seed in spec.seeds:
            X = glm_covariate_design(D, seed, j_max)
            covs = [CovariateSet(tuple(X[j]), label=f"x{j}") for j in range(j_max)]
            js_all = sample_judgements(spec.sampling_alpha, lam0, model,
                                       [atoms] * j_max, covs, seed=seed)
            for J in sorted(spec.js):
                js = JudgementSet(js_all.items[:J])
                result = fit(js, model, cfg, start=model.default_hyperparams())
                sigma_hat = model.covariance(result.lambda_hat)
                log_frob = float(np.log(np.linalg.norm(sigma_hat - sigma0, "fro")))
                rows.append({"D": D, "J": J, "seed": int(seed),
                             "log_frob": log_frob})
    return ExperimentResult("glm-frobenius", ["D", "J", "seed", "log_frob"],
                            rows, _metadata(spec))


# ---------------------------------------------------------------------------
# growth-protocol (quantile elicitation end to end)


def reference_thresholds(ages: Sequence[float], shape: float = 20.0,
                         theta=THETA_REFERENCE,
                         levels: Sequence[float] = QUANTILE_LEVELS) -> dict:
    """Threshold fixtures: quantiles of a Weibull with mean h(t; θ_ref).

    The observation noise of the fixture generator lives on the outcome
    (cm) scale; ``shape`` controls its relative spread.
    """
    out = {}
    gamma_term = float(np.exp(gammaln(1.0 + 1.0 / shape)))
    for t in ages:
        mean = growth_curve(float(t), np.asarray(theta))
        scale = mean / gamma_term
        out[f"{float(t):g}"] = [float(scale * (-np.log1p(-q)) ** (1.0 / shape))
                                for q in levels]
    return out


def run_growth_protocol(spec: ExperimentSpec) -> ExperimentResult:
    model = GrowthWeibullModel()
    thresholds = spec.thresholds or reference_thresholds(spec.ages,
                                                         shape=spec.growth_shape)
    items = []
    for t in spec.ages:
        ys = thresholds[f"{float(t):g}"]
        items.append(quantile_judgement(ys, covariate=CovariateSet((float(t),),
                                                                   label=f"t={t:g}"),
                                        support=(0.0, np.inf)))
    judgements = JudgementSet(tuple(items), expert="fixture")

    # Common-random-number natural gradient is the workhorse here; the
    # 12-dimensional Monte Carlo surface has poor basins, so a couple of
    # fresh-draw restarts guard against landing in one.
    seed = spec.seeds[0]
    result = None
    for attempt, start in ((0, None), (1, None),
                           (2, model.default_hyperparams())):
        cfg = OptimizerConfig(method="natural-gradient", seed=seed + attempt,
                              mc_draws=spec.mc_draws,
                              max_iterations=spec.fit_max_iterations,
                              alpha_rounds=5)
        candidate = fit(judgements, model, cfg, start=start)
        if result is None or candidate.alpha.alpha_hat > result.alpha.alpha_hat:
            result = candidate
        if result.alpha.alpha_hat >= 5.0 and result.converged:
            break

    rows = []
    moments = model.prior_moments(result.lambda_hat)
    for nm in (*THETA_NAMES, "b"):
        rows.append({"quantity": f"prior_mean[{nm}]", "age": "",
                     "value": moments[nm]["mean"]})
        rows.append({"quantity": f"prior_variance[{nm}]", "age": "",
                     "value": moments[nm]["variance"]})
    rows.append({"quantity": "alpha_hat", "age": "",
                 "value": float(result.alpha.alpha_hat)})
    rows.append({"quantity": "kl_total", "age": "",
                 "value": float(result.alpha.kl_total)})
    rows.append({"quantity": "converged", "age": "",
                 "value": float(result.converged)})

    for t in spec.ages:
        draws = model.predictive_draws(result.lambda_hat, float(t),
                                       seed=seed + 104729, draws=20000)
        rows.append({"quantity": "predictive_median", "age": f"{t:g}",
                     "value": float(np.quantile(draws, 0.5))})
        rows.append({"quantity": "predictive_q25", "age": f"{t:g}",
                     "value": float(np.quantile(draws, 0.25))})
        rows.append({"quantity": "predictive_q75", "age": f"{t:g}",
                     "value": float(np.quantile(draws, 0.75))})
    for entry in model.curve_summary(result.lambda_hat, spec.ages,
                                     seed=seed + 7)["ages"]:
        rows.append({"quantity": "median_h", "age": f"{entry['age']:g}",
                     "value": entry["median_h"]})
        rows.append({"quantity": "median_exp_h", "age": f"{entry['age']:g}",
                     "value": entry["median_exp_h"]})
        rows.append({"quantity": "mean_exp_h", "age": f"{entry['age']:g}",
                     "value": entry["mean_exp_h"]})

    meta = _metadata(spec)
    meta["thresholds"] = thresholds
    meta["fit"] = result.to_json()
    return ExperimentResult("growth-protocol", ["quantity", "age", "value"],
                            rows, meta)


# ---------------------------------------------------------------------------


_RUNNERS = {
    "alpha-illustration": run_alpha_illustration,
    "consistency": run_consistency,
    "glm-frobenius": run_glm_frobenius,
    "growth-protocol": run_growth_protocol,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    return _RUNNERS[spec.name](spec)


def default_spec(name: str) -> ExperimentSpec:
    # Judgement noise per study: the refinement study keeps α = 1000 so
    # recovery is tested against visibly noisy judgements; the GLM study
    # uses tighter judgements so the J-ladder isolates the information
    # growth rather than noise amplification at the interpolation point.
    if name == "glm-frobenius":
        return ExperimentSpec(name=name, sampling_alpha=1e4)
    return ExperimentSpec(name=name)
