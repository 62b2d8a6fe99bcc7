"""Hyperparameter optimization of the judgement likelihood.

Three backends share one unconstrained interface:

* natural gradient — closed-form Fisher metric, SPD solve, backtracking
  line search; for models with analytic bin-probability jacobians.
* stochastic natural gradient — reparametrized Monte Carlo jacobians,
  Robbins-Monro step decay, periodic Fisher refresh; for hierarchical
  models without closed forms.
* Nelder-Mead — derivative-free simplex search for anything that can
  only be evaluated.

The driver alternates λ-optimization at fixed α with closed-form α̂
refreshes (optionally polished by the exact 1-D maximum-likelihood α)
until neither moves.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import MaxIterExceeded, OptimizerFailure, PriorForgeError
from .fisher import FisherMatrix, hyper_fisher
from .judgements import (ConcentrationEstimate, JudgementSet, alpha_hat,
                         dirichlet_logpdf, dirichlet_score_p, exact_alpha_mle,
                         predictive_per_judgement)
from .predictive import BinProbabilities
from .transforms import HyperParams

_LL_SLACK = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "natural-gradient"
    step_size: float = 1.0
    max_iterations: int = 200
    param_tol: float = 1e-6
    loglik_tol: float = 1e-8
    jitter: float = 1e-8
    mc_draws: int = 4096
    seed: int = 0
    alpha_rounds: int = 25
    alpha_tol: float = 1e-3
    fix_alpha: Optional[float] = None
    polish_alpha: bool = True
    nm_max_evals: int = 4000
    nm_initial_scale: float = 0.25
    nm_restart_scale: float = 0.1
    fisher_refresh: int = 10
    step_decay: float = 100.0
    max_step: float = 0.5          # ∞-norm trust region per stochastic step
    iterate_bound: float = 35.0    # |u| box keeping exp() representable
    slope_window: int = 50
    slope_tol: float = 1e-3

    def __post_init__(self):
        if self.method not in ("natural-gradient", "stochastic-natural-gradient",
                               "nelder-mead"):
            raise PriorForgeError(f"unknown optimizer method {self.method!r}")
        if self.step_size <= 0 or self.param_tol <= 0 or self.loglik_tol <= 0:
            raise PriorForgeError("step size and tolerances must be positive")

    def to_json(self) -> dict:
        doc = {k: getattr(self, k) for k in self.__dataclass_fields__}
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "OptimizerConfig":
        known = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        return cls(**known)


class JudgementObjective:
    """Log-likelihood, score, and Fisher metric as functions of u.

    Monte Carlo models are evaluated with seeds derived from
    (seed, eval_key, covariate index); holding ``eval_key`` fixed gives
    common random numbers across every λ evaluation (line searches,
    simplex moves), bumping it redraws (stochastic iterations).
    """

    def __init__(self, judgements: JudgementSet, model, config: OptimizerConfig):
        self.judgements = judgements
        self.model = model
        self.config = config
        self.spec = model.hyperparam_spec()
        self.eval_key = 0
        self.n_evals = 0

    def _seed(self) -> int:
        ss = np.random.SeedSequence(entropy=int(self.config.seed) & 0xFFFFFFFFFFFFFFFF,
                                    spawn_key=(int(self.eval_key),))
        return int(ss.generate_state(1, dtype=np.uint64)[0])

    def hyperparams(self, u: np.ndarray) -> HyperParams:
        return HyperParams.from_unconstrained(self.spec, u)

    def canonical(self, u: np.ndarray) -> np.ndarray:
        canon = getattr(self.model, "canonicalize", None)
        if canon is None:
            return u
        return canon(self.hyperparams(u)).unconstrained()

    def probabilities(self, u: np.ndarray, want_jacobian: bool = False):
        lam = self.hyperparams(u)
        return lam, predictive_per_judgement(
            self.judgements, lam, self.model, want_jacobian=want_jacobian,
            seed=self._seed(), draws=self.config.mc_draws)

    def loglik(self, u: np.ndarray, alpha: float) -> float:
        self.n_evals += 1
        try:
            _, probs = self.probabilities(u)
        except PriorForgeError:
            return -np.inf
        total = 0.0
        for item, P in zip(self.judgements.items, probs):
            total += dirichlet_logpdf(item.p, alpha, P)
        return total

    def loglik_grad_fisher(self, u: np.ndarray, alpha: float):
        self.n_evals += 1
        lam, probs = self.probabilities(u, want_jacobian=True)
        T = lam.constrain_jacobian()
        ll = 0.0
        grad = np.zeros(T.shape[1])
        for item, P in zip(self.judgements.items, probs):
            ll += dirichlet_logpdf(item.p, alpha, P)
            s = dirichlet_score_p(item.p, alpha, P.floored())
            grad += T.T @ (P.jacobian.T @ s)
        H = hyper_fisher(alpha, lam, self.model, self.judgements,
                         probabilities=probs)
        return ll, grad, H


@dataclass
class OptState:
    """One natural-gradient iterate."""

    u: np.ndarray
    alpha: float
    loglik: float
    grad: np.ndarray
    fisher: FisherMatrix
    iteration: int = 0
    step_norm: float = np.inf
    converged: bool = False
    last_eta: float = 1.0


def natural_gradient_step(state: OptState, objective: JudgementObjective,
                          config: OptimizerConfig) -> OptState:
    """One preconditioned ascent step with backtracking line search.

    The candidate direction is H⁻¹∇ℓ through an SPD solve; the step is
    halved (up to 20 times) until the log-likelihood does not decrease.
    """
    if np.max(np.abs(state.grad)) < 1e-14:
        return replace(state, step_norm=0.0, converged=True)
    direction = state.fisher.solve(state.grad, config.jitter)
    # A near-singular metric can make H⁻¹∇ so large that every halving
    # stays outside the basin; capping keeps the line search meaningful.
    cap = 8.0 * config.max_step
    slack = _LL_SLACK * (1.0 + abs(state.loglik))
    for trial_dir in (direction, state.grad):
        trial = trial_dir.copy()
        norm = float(np.max(np.abs(trial)))
        if norm > cap:
            trial *= cap / norm
        # Warm-start near the last accepted step length to keep stalled
        # stretches from burning the whole backtracking budget every time.
        eta = min(config.step_size, 4.0 * state.last_eta)
        for _ in range(21):
            candidate = state.u + eta * trial
            ll_c = objective.loglik(candidate, state.alpha)
            if np.isfinite(ll_c) and ll_c > state.loglik + slack:
                u_new = objective.canonical(candidate)
                step_norm = float(np.max(np.abs(eta * trial)))
                ll, grad, H = objective.loglik_grad_fisher(u_new, state.alpha)
                converged = (step_norm < config.param_tol
                             and abs(ll - state.loglik) < config.loglik_tol)
                return OptState(u_new, state.alpha, ll, grad, H,
                                state.iteration + 1, step_norm, converged,
                                last_eta=eta)
            eta *= 0.5
        # Metric direction failed the whole backtrack: retry along the
        # plain gradient, which must ascend unless we are stationary.
    # No strict improvement at line-search resolution in either direction.
    return replace(state, step_norm=0.0, converged=True,
                   iteration=state.iteration + 1)


def run_natural_gradient(objective: JudgementObjective, u0: np.ndarray,
                         alpha: float, config: OptimizerConfig,
                         should_stop: Callable[[], bool] | None = None):
    """Iterate natural-gradient steps to convergence; monotone trace."""
    u0 = objective.canonical(u0)
    ll, grad, H = objective.loglik_grad_fisher(u0, alpha)
    state = OptState(u0, alpha, ll, grad, H, last_eta=config.step_size)
    trace = [ll]
    stalled = 0
    for _ in range(config.max_iterations):
        if should_stop and should_stop():
            break
        prev_ll = state.loglik
        state = natural_gradient_step(state, objective, config)
        trace.append(state.loglik)
        if state.converged:
            break
        # Flat progress over several iterations is convergence in practice
        # even when individual steps stay above the step tolerance.
        stalled = stalled + 1 if state.loglik - prev_ll < config.loglik_tol else 0
        if stalled >= 5:
            state = replace(state, converged=True)
            break
    return state.u, trace, state.converged, state.iteration


def run_stochastic_natural_gradient(objective: JudgementObjective, u0: np.ndarray,
                                    alpha: float, config: OptimizerConfig,
                                    should_stop: Callable[[], bool] | None = None):
    """Robbins-Monro natural gradient with fresh draws per iteration.

    No line search (Monte Carlo noise defeats acceptance tests); the
    Fisher preconditioner is refreshed every ``fisher_refresh`` iterations
    and convergence is a trailing-window test on the log-likelihood slope.
    """
    u = objective.canonical(u0)
    last_good = u.copy()
    trace: list[float] = []
    H: FisherMatrix | None = None
    converged = False
    failures = 0
    it = 0
    for t in range(config.max_iterations):
        if should_stop and should_stop():
            break
        objective.eval_key = t + 1
        try:
            if H is None or t % config.fisher_refresh == 0:
                ll, grad, H = objective.loglik_grad_fisher(u, alpha)
            else:
                ll, grad, _ = _loglik_grad_only(objective, u, alpha)
            bad = not (np.isfinite(ll) and np.all(np.isfinite(grad)))
        except PriorForgeError:
            bad = True
        if bad:
            # Excursion into a numerically hostile region: retreat halfway
            # toward the last evaluable point instead of propagating NaNs.
            failures += 1
            if failures > 30:
                raise OptimizerFailure(
                    "stochastic natural gradient: too many non-finite regions")
            u = 0.5 * (u + last_good)
            H = None
            continue
        last_good = u.copy()
        trace.append(ll)
        eta = config.step_size / (1.0 + t / config.step_decay)
        step = eta * H.solve(grad, config.jitter)
        norm = float(np.max(np.abs(step)))
        if norm > config.max_step:          # Monte Carlo spikes; stay local
            step *= config.max_step / norm
        u = np.clip(u + step, -config.iterate_bound, config.iterate_bound)
        u = objective.canonical(u)
        it = t + 1
        w = config.slope_window
        if len(trace) >= w:
            slope = np.polyfit(np.arange(w), np.asarray(trace[-w:]), 1)[0]
            if abs(slope) < config.slope_tol:
                converged = True
                break
    objective.eval_key = 0
    return u, trace, converged, it


def _loglik_grad_only(objective: JudgementObjective, u: np.ndarray, alpha: float):
    lam, probs = objective.probabilities(u, want_jacobian=True)
    T = lam.constrain_jacobian()
    ll = 0.0
    grad = np.zeros(T.shape[1])
    for item, P in zip(objective.judgements.items, probs):
        ll += dirichlet_logpdf(item.p, alpha, P)
        s = dirichlet_score_p(item.p, alpha, P.floored())
        grad += T.T @ (P.jacobian.T @ s)
    return ll, grad, None


# ---------------------------------------------------------------------------
# Nelder-Mead


def nelder_mead_minimize(func: Callable[[np.ndarray], float], x0: np.ndarray,
                         max_evals: int = 4000, initial_scale: float = 0.25,
                         restart_scale: float = 0.1, ftol: float = 1e-12,
                         xtol: float = 1e-10,
                         should_stop: Callable[[], bool] | None = None):
    """Simplex minimization: reflection 1, expansion 2, contraction ½, shrink ½.

    After the first convergence (or budget slice) the search restarts once
    from the best vertex with a fresh simplex of scale ``restart_scale``.
    Returns (x_best, f_best, n_evals, converged).
    """
    x0 = np.asarray(x0, dtype=float)
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = func(x)
        return v if np.isfinite(v) else np.inf

    def solve(xs, budget):
        nonlocal evals
        n = x0.size
        simplex = np.array(xs)
        fx = np.array([f(x) for x in simplex])
        while evals < budget:
            if should_stop and should_stop():
                break
            order = np.argsort(fx, kind="stable")
            simplex, fx = simplex[order], fx[order]
            if (fx[-1] - fx[0] <= ftol * (1.0 + abs(fx[0]))
                    and np.max(np.abs(simplex[1:] - simplex[0])) <= xtol):
                return simplex[0], fx[0], True
            centroid = simplex[:-1].mean(axis=0)
            xr = centroid + (centroid - simplex[-1])
            fr = f(xr)
            if fr < fx[0]:
                xe = centroid + 2.0 * (centroid - simplex[-1])
                fe = f(xe)
                simplex[-1], fx[-1] = (xe, fe) if fe < fr else (xr, fr)
            elif fr < fx[-2]:
                simplex[-1], fx[-1] = xr, fr
            else:
                inside = fr >= fx[-1]
                xc = centroid + 0.5 * ((simplex[-1] if inside else xr) - centroid)
                fc = f(xc)
                if fc < min(fr, fx[-1]):
                    simplex[-1], fx[-1] = xc, fc
                else:
                    simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                    fx[1:] = [f(x) for x in simplex[1:]]
        order = np.argsort(fx, kind="stable")
        return simplex[order][0], fx[order][0], False

    def initial_simplex(center, scale):
        pts = [center]
        for i in range(center.size):
            e = center.copy()
            e[i] += scale
            pts.append(e)
        return pts

    half = max_evals // 2
    x_best, f_best, conv = solve(initial_simplex(x0, initial_scale), half)
    x2, f2, conv2 = solve(initial_simplex(x_best, restart_scale), max_evals)
    if f2 <= f_best:
        x_best, f_best, conv = x2, f2, conv2
    return x_best, f_best, evals, conv


# ---------------------------------------------------------------------------
# Fit driver


@dataclass
class FitResult:
    """Outcome of one alternating (λ, α) fit."""

    model: str
    lambda_hat: HyperParams
    alpha: ConcentrationEstimate
    alpha_opt: float
    loglik: float
    loglik_trace: list[float]
    fitted: list[BinProbabilities]
    covariate_labels: list[str]
    converged: bool
    iterations: int
    config: OptimizerConfig
    judgement_hash: str

    def to_json(self) -> dict:
        fitted = []
        for label, P in zip(self.covariate_labels, self.fitted):
            entry = {"covariate": label,
                     "values": [float(v) for v in P.values]}
            if P.estimator_sd is not None:
                entry["estimator_sd"] = [float(v) for v in P.estimator_sd]
            fitted.append(entry)
        return {
            "model": self.model,
            "hyperparams": self.lambda_hat.to_json(),
            "alpha": self.alpha.to_json(),
            "alpha_opt": float(self.alpha_opt),
            "loglik": float(self.loglik),
            "loglik_trace": [float(v) for v in self.loglik_trace],
            "fitted_probabilities": fitted,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "config": self.config.to_json(),
            "judgement_hash": self.judgement_hash,
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, indent=2).encode()


def judgement_hash(judgements: JudgementSet) -> str:
    doc = json.dumps(judgements.to_json(), sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


def fit(judgements: JudgementSet, model, config: OptimizerConfig | None = None,
        start: HyperParams | None = None,
        should_stop: Callable[[], bool] | None = None) -> FitResult:
    """Alternating maximum-likelihood fit of (λ, α) to a judgement set."""
    config = config or OptimizerConfig()
    try:
        return _fit_inner(judgements, model, config, start, should_stop)
    except PriorForgeError as exc:
        raise OptimizerFailure(f"{type(exc).__name__}: {exc}") from exc


def _fit_inner(judgements, model, config, start, should_stop) -> FitResult:
    objective = JudgementObjective(judgements, model, config)
    lam0 = start if start is not None else model.initial_hyperparams(judgements)
    u = objective.canonical(lam0.unconstrained())

    if config.fix_alpha is not None:
        alpha = float(config.fix_alpha)
    else:
        lam, probs = objective.probabilities(u)
        alpha = alpha_hat(judgements, probabilities=probs).alpha_hat

    trace: list[float] = []
    iterations = 0
    converged = False
    for _ in range(config.alpha_rounds):
        if config.method == "natural-gradient":
            u, tr, conv, iters = run_natural_gradient(
                objective, u, alpha, config, should_stop)
        elif config.method == "stochastic-natural-gradient":
            u, tr, conv, iters = run_stochastic_natural_gradient(
                objective, u, alpha, config, should_stop)
        else:
            x, fbest, evals, conv = nelder_mead_minimize(
                lambda v: -objective.loglik(v, alpha), u,
                max_evals=config.nm_max_evals,
                initial_scale=config.nm_initial_scale,
                restart_scale=config.nm_restart_scale,
                should_stop=should_stop)
            u = objective.canonical(x)
            tr, iters = [-fbest], evals
        trace.extend(tr)
        iterations += iters

        if config.fix_alpha is not None:
            converged = conv
            break
        lam, probs = objective.probabilities(u)
        est = alpha_hat(judgements, probabilities=probs)
        alpha_new = est.alpha_hat
        if config.polish_alpha and not est.capped:
            alpha_new = exact_alpha_mle(judgements, probabilities=probs)
        rel_change = abs(alpha_new - alpha) / max(1.0, abs(alpha))
        alpha = alpha_new
        if conv and rel_change < config.alpha_tol:
            converged = True
            break

    lam_hat = objective.hyperparams(objective.canonical(u))
    lam_final, probs = objective.probabilities(lam_hat.unconstrained())
    final_est = alpha_hat(judgements, probabilities=probs)
    final_ll = sum(dirichlet_logpdf(it.p, alpha, P)
                   for it, P in zip(judgements.items, probs))
    labels = [it.covariate.label or f"j{idx}"
              for idx, it in enumerate(judgements.items)]
    return FitResult(
        model=model.name,
        lambda_hat=lam_final,
        alpha=final_est,
        alpha_opt=float(alpha),
        loglik=float(final_ll),
        loglik_trace=[float(v) for v in trace],
        fitted=probs,
        covariate_labels=labels,
        converged=converged,
        iterations=iterations,
        config=config,
        judgement_hash=judgement_hash(judgements),
    )
