"""HTTP wrapper around the elicitation engine.

JSON in, JSON out; session state lives in the file-backed store.  Fits
run as cancellable background jobs; clients poll the status endpoint and
then pull the session or predictive curve.  Every response that depends
on judgements or fit configuration carries the hashes it was computed
from, so clients can detect staleness.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .errors import (NotFitted, OptimizerFailure, PriorForgeError,
                     SessionNotFound, UnknownModel)
from .models import create_model, model_names
from .sessions import SessionStore, alpha_band

_STATUS = {
    SessionNotFound: 404,
    UnknownModel: 404,
    NotFitted: 409,
    OptimizerFailure: 422,
}


def create_app(data_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="prior-forge", version="0.1.0")
    store = SessionStore(data_dir)
    app.state.store = store

    @app.exception_handler(PriorForgeError)
    async def _handle(request: Request, exc: PriorForgeError):
        code = _STATUS.get(type(exc), 400)
        return JSONResponse(status_code=code,
                            content={"error": type(exc).__name__,
                                     "message": str(exc)})

    def _session_body(session) -> dict:
        doc = session.to_json()
        if doc.get("fit"):
            alpha = doc["fit"]["alpha"]["alpha_hat"]
            doc["alpha_band"] = alpha_band(alpha)
        return doc

    @app.get("/models")
    def list_models():
        out = []
        for name in model_names():
            kwargs = {"n_coefficients": 2} if name == "probit-glm" else {}
            out.append(create_model(name, **kwargs).hyperparam_schema())
        return {"models": out}

    @app.post("/sessions", status_code=201)
    def create_session(body: dict = Body(...)):
        session = store.create_session(
            model=body.get("model", ""),
            partitions=body.get("partitions", []),
            covariates=body.get("covariates", []),
            model_options=body.get("model_options"))
        return _session_body(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_body(store.load(session_id))

    @app.post("/sessions/{session_id}/judgements")
    def submit_judgements(session_id: str, body: dict = Body(...)):
        session = store.submit_judgements(session_id, body.get("judgements", []))
        return _session_body(session)

    @app.post("/sessions/{session_id}/fit", status_code=202)
    def fit_session(session_id: str, body: Optional[dict] = Body(default=None)):
        body = body or {}
        status = store.start_fit(session_id, body.get("config"),
                                 background=bool(body.get("background", True)))
        return {"session": session_id, "job": status}

    @app.get("/sessions/{session_id}/fit/status")
    def fit_status(session_id: str):
        status = store.fit_status(session_id)
        session = store.load(session_id)
        out = {"session": session_id, "status": session.status, **status,
               "judgement_hash": session.judgement_hash,
               "config_hash": session.config_hash}
        if session.fit:
            alpha = session.fit["alpha"]["alpha_hat"]
            out["alpha_hat"] = alpha
            out["alpha_band"] = alpha_band(alpha)
        return out

    @app.get("/sessions/{session_id}/predictive")
    def predictive(session_id: str,
                   covariate: Optional[str] = Query(default=None),
                   from_: Optional[float] = Query(default=None, alias="from"),
                   to: Optional[float] = Query(default=None),
                   points: int = Query(default=201, ge=2, le=10001)):
        return store.predictive(session_id, covariate, from_, to, points)

    return app
