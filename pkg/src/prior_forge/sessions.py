"""File-backed elicitation sessions.

A session pins one model, its partitions, and covariate sets; accumulates
judgements; and carries the latest fit.  Each session is one JSON
document in the data directory, written atomically (temp file + rename),
and all mutations of one session are serialized behind a per-session
lock.  Judgement edits flip a fitted session to ``stale`` so the UI can
grey out results until a refit.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (InvalidPartition, NotFitted, OptimizerFailure,
                     PartitionError, PriorForgeError, SessionNotFound,
                     UnknownModel)
from .judgements import (Judgement, JudgementSet, chips_to_probabilities,
                         make_judgement, quantile_judgement, QUANTILE_LEVELS)
from .models import create_model, model_names
from .optimizers import FitResult, OptimizerConfig, fit, judgement_hash
from .partition import CovariateSet, Partition, SampleSpace, validate_partition
from .predictive import bin_probabilities

DATA_DIR_ENV = "PRIOR_FORGE_DATA_DIR"

_MODEL_SPACES = {
    "gaussian-mixture": SampleSpace.real_line(),
    "probit-glm": SampleSpace.discrete((0.0, 1.0)),
    "growth-weibull": SampleSpace.positive_line(),
}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def alpha_band(alpha: float) -> str:
    """Plain-language quality band; thresholds are reporting policy, not theory."""
    if alpha < 5.0:
        return "poor"
    if alpha <= 50.0:
        return "moderate"
    return "close"


@dataclass
class Session:
    id: str
    model: str
    model_options: dict
    partitions: list[Partition]
    covariates: list[CovariateSet]
    judgements: Optional[JudgementSet] = None
    fit: Optional[dict] = None
    status: str = "draft"                  # draft | fitted | stale
    created: str = field(default_factory=_now)
    updated: str = field(default_factory=_now)
    judgement_hash: Optional[str] = None
    config_hash: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "schema_version": 1,
            "id": self.id,
            "model": self.model,
            "model_options": self.model_options,
            "partitions": [p.to_json() for p in self.partitions],
            "covariates": [c.to_json() for c in self.covariates],
            "judgements": self.judgements.to_json() if self.judgements else None,
            "fit": self.fit,
            "status": self.status,
            "created": self.created,
            "updated": self.updated,
            "judgement_hash": self.judgement_hash,
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Session":
        return cls(
            id=doc["id"],
            model=doc["model"],
            model_options=doc.get("model_options", {}),
            partitions=[Partition.from_json(p) for p in doc["partitions"]],
            covariates=[CovariateSet.from_json(c) for c in doc["covariates"]],
            judgements=(JudgementSet.from_json(doc["judgements"])
                        if doc.get("judgements") else None),
            fit=doc.get("fit"),
            status=doc.get("status", "draft"),
            created=doc.get("created", _now()),
            updated=doc.get("updated", _now()),
            judgement_hash=doc.get("judgement_hash"),
            config_hash=doc.get("config_hash"),
        )

    def make_model(self):
        return create_model(self.model, **self.model_options)


class SessionStore:
    """One JSON file per session under ``data_dir``; per-session write locks."""

    def __init__(self, data_dir: str | None = None):
        self.data_dir = data_dir or os.environ.get(DATA_DIR_ENV) or "prior-forge-data"
        os.makedirs(self.data_dir, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._jobs: dict[str, dict] = {}

    # -- plumbing -------------------------------------------------------------

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.json")

    def _save(self, session: Session) -> None:
        payload = json.dumps(session.to_json(), sort_keys=True, indent=2)
        fd, tmp = tempfile.mkstemp(dir=self.data_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, self._path(session.id))
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def load(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not os.path.exists(path):
            raise SessionNotFound(f"no session {session_id!r}")
        with open(path) as fh:
            return Session.from_json(json.load(fh))

    def list_ids(self) -> list[str]:
        return sorted(f[:-5] for f in os.listdir(self.data_dir)
                      if f.endswith(".json"))

    # -- operations -------------------------------------------------------------

    def create_session(self, model: str, partitions: list[dict],
                       covariates: list[dict],
                       model_options: dict | None = None) -> Session:
        if model not in model_names():
            raise UnknownModel(f"no model named {model!r}; known: {model_names()}")
        model_options = model_options or {}
        space = _MODEL_SPACES[model]
        parts, covs = [], []
        for doc in partitions:
            try:
                parts.append(validate_partition(Partition.from_json(doc), space))
            except PartitionError as exc:
                raise InvalidPartition(str(exc)) from exc
        for doc in covariates:
            covs.append(CovariateSet.from_json(doc))
        if len(parts) not in (1, len(covs)) and covs:
            raise InvalidPartition(
                f"{len(parts)} partitions for {len(covs)} covariate sets")
        if covs and len(parts) == 1:
            parts = parts * len(covs)
        if not covs:
            covs = [CovariateSet(label=f"j{i}") for i in range(len(parts))]
        create_model(model, **model_options)     # validates the options
        session = Session(id=uuid.uuid4().hex, model=model,
                          model_options=model_options,
                          partitions=parts, covariates=covs)
        with self._lock(session.id):
            self._save(session)
        return session

    def _covariate_index(self, session: Session, ref) -> int:
        if isinstance(ref, int):
            if not 0 <= ref < len(session.covariates):
                raise PriorForgeError(f"covariate index {ref} out of range")
            return ref
        for i, c in enumerate(session.covariates):
            if c.label == ref:
                return i
        raise PriorForgeError(f"no covariate labelled {ref!r}")

    def submit_judgements(self, session_id: str, payload: list[dict]) -> Session:
        """Accept simplex, roulette-chip, or quantile-threshold judgements.

        Quantile submissions carry their own bin edges, so they replace
        the stored partition for their covariate set.
        """
        with self._lock(session_id):
            session = self.load(session_id)
            items: dict[int, Judgement] = {}
            if session.judgements:
                for it in session.judgements.items:
                    items[self._covariate_index(session, it.covariate.label)] = it
            for doc in payload:
                idx = self._covariate_index(session, doc.get("covariate", 0))
                cov = session.covariates[idx]
                if "thresholds" in doc:
                    space = _MODEL_SPACES[session.model]
                    support = (space.lower[0], space.upper[0]) \
                        if space.atoms is None else (0.0, np.inf)
                    j = quantile_judgement(
                        doc["thresholds"], covariate=cov,
                        levels=tuple(doc.get("levels") or QUANTILE_LEVELS),
                        support=support)
                    session.partitions[idx] = j.partition
                elif "chips" in doc:
                    j = make_judgement(chips_to_probabilities(doc["chips"]),
                                       session.partitions[idx], cov)
                else:
                    j = make_judgement(doc["p"], session.partitions[idx], cov)
                items[idx] = j
            ordered = tuple(items[k] for k in sorted(items))
            session.judgements = JudgementSet(ordered, expert=session.id)
            session.judgement_hash = judgement_hash(session.judgements)
            session.status = "stale" if session.fit else "draft"
            session.updated = _now()
            self._save(session)
            return session

    # -- fitting -------------------------------------------------------------

    def start_fit(self, session_id: str, config_doc: dict | None = None,
                  background: bool = True) -> dict:
        session = self.load(session_id)
        if not session.judgements:
            raise OptimizerFailure("NoJudgements: submit judgements before fitting")
        config = OptimizerConfig.from_json(config_doc or {})
        job = {"state": "running", "error": None, "cancel": False}
        self._jobs[session_id] = job

        def work():
            try:
                self._run_fit(session_id, config, job)
                job["state"] = "done"
            except Exception as exc:       # job surface: report, don't raise
                job["state"] = "failed"
                job["error"] = f"{type(exc).__name__}: {exc}"

        if background:
            thread = threading.Thread(target=work, daemon=True)
            job["thread"] = thread
            thread.start()
        else:
            work()
            if job["state"] == "failed":
                raise OptimizerFailure(job["error"])
        return {"state": job["state"], "error": job["error"]}

    def _run_fit(self, session_id: str, config: OptimizerConfig, job: dict) -> None:
        session = self.load(session_id)
        model = session.make_model()
        result = fit(session.judgements, model, config,
                     should_stop=lambda: job["cancel"])
        with self._lock(session_id):
            session = self.load(session_id)
            session.fit = result.to_json()
            session.status = "fitted"
            session.config_hash = _hash_config(config)
            session.judgement_hash = result.judgement_hash
            session.updated = _now()
            self._save(session)

    def fit_status(self, session_id: str) -> dict:
        self.load(session_id)                      # 404 on unknown ids
        job = self._jobs.get(session_id)
        if job is None:
            session = self.load(session_id)
            state = "done" if session.fit else "idle"
            return {"state": state, "error": None}
        return {"state": job["state"], "error": job["error"]}

    def cancel_fit(self, session_id: str) -> None:
        job = self._jobs.get(session_id)
        if job:
            job["cancel"] = True

    # -- predictive -------------------------------------------------------------

    def predictive(self, session_id: str, covariate: str | int | None = None,
                   lo: float | None = None, hi: float | None = None,
                   points: int = 201, seed: int = 0) -> dict:
        session = self.load(session_id)
        if not session.fit:
            raise NotFitted(f"session {session_id} has no fit")
        idx = self._covariate_index(session, covariate if covariate is not None else 0)
        model = session.make_model()
        from .transforms import HyperParams
        lam = HyperParams(model.hyperparam_spec(),
                          np.asarray(session.fit["hyperparams"]["constrained"]))
        cov = session.covariates[idx]
        part = session.partitions[idx]
        fitted = bin_probabilities(model, lam, cov, part, seed=seed)
        expert_p = None
        if session.judgements:
            for it in session.judgements.items:
                if it.covariate.label == cov.label:
                    expert_p = [float(v) for v in it.p]
        curve: dict = {"covariate": cov.label,
                       "bin_probabilities": [float(v) for v in fitted.values],
                       "expert_p": expert_p,
                       "judgement_hash": session.judgement_hash,
                       "config_hash": session.config_hash}
        if part.discrete_support:
            curve["atoms"] = list(part.atoms)
            return curve
        lo = -8.0 if lo is None else float(lo)
        hi = 8.0 if hi is None else float(hi)
        grid = np.linspace(lo, hi, int(points))
        curve["grid"] = [float(v) for v in grid]
        if hasattr(model, "predictive_density"):
            curve["density"] = [float(v) for v in model.predictive_density(lam, grid)]
        if model.stochastic:
            draws = model.predictive_draws(lam, float(cov.x[0]) if cov.x else 0.0,
                                           seed=seed, draws=8192)
            cdf = np.searchsorted(np.sort(draws), grid, side="right") / draws.size
            curve["cdf"] = [float(v) for v in cdf]
            curve["cdf_se"] = [float(np.sqrt(max(v * (1 - v), 0.0) / draws.size))
                               for v in cdf]
        else:
            curve["cdf"] = [float(model.predictive_cdf(lam, cov, np.array([y])))
                            for y in grid]
        return curve


def _hash_config(config: OptimizerConfig) -> str:
    import hashlib
    return hashlib.sha256(
        json.dumps(config.to_json(), sort_keys=True).encode()).hexdigest()
