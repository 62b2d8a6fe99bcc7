"""HTTP service and session store."""

import json
import os
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from prior_forge.service import create_app
from prior_forge.sessions import SessionStore, alpha_band

MIXTURE_PARTITION = {"bins": (
    [{"lower": ["-inf"], "upper": [-2.0]}]
    + [{"lower": [lo], "upper": [lo + 1.0]} for lo in (-2.0, -1.0, 0.0, 1.0)]
    + [{"lower": [2.0], "upper": ["inf"]}])}


@pytest.fixture()
def client(tmp_path):
    app = create_app(str(tmp_path))
    with TestClient(app) as c:
        yield c


def _mixture_session(client):
    body = {"model": "gaussian-mixture",
            "partitions": [MIXTURE_PARTITION],
            "covariates": [{"x": [], "label": "all"}]}
    r = client.post("/sessions", json=body)
    assert r.status_code == 201, r.text
    return r.json()


def _submit_balanced(client, sid):
    p = [0.05, 0.15, 0.30, 0.30, 0.15, 0.05]
    r = client.post(f"/sessions/{sid}/judgements",
                    json={"judgements": [{"covariate": "all", "p": p}]})
    assert r.status_code == 200, r.text
    return r.json()


def _fit_and_wait(client, sid, config=None, timeout=60.0):
    r = client.post(f"/sessions/{sid}/fit", json={"config": config or {}})
    assert r.status_code == 202, r.text
    deadline = time.time() + timeout
    while time.time() < deadline:
        status = client.get(f"/sessions/{sid}/fit/status").json()
        if status["state"] in ("done", "failed"):
            return status
        time.sleep(0.05)
    raise TimeoutError("fit did not finish")


class TestModels:
    def test_registry_lists_schemas(self, client):
        r = client.get("/models")
        assert r.status_code == 200
        names = {m["model"] for m in r.json()["models"]}
        assert names == {"gaussian-mixture", "probit-glm", "growth-weibull"}
        mix = next(m for m in r.json()["models"] if m["model"] == "gaussian-mixture")
        assert "mu1" in mix["names"]


class TestSessions:
    def test_create_growth_session(self, client):
        thresholds = {"0": [60, 68, 74, 80, 88]}
        body = {"model": "growth-weibull",
                "partitions": [{"bins": [
                    {"lower": [0.0], "upper": [150.0]},
                    {"lower": [150.0], "upper": ["inf"]}]}] * 4,
                "covariates": [{"x": [t], "label": f"t={t}"}
                               for t in (0.0, 2.5, 10.0, 17.5)]}
        r = client.post("/sessions", json=body)
        assert r.status_code == 201
        doc = r.json()
        assert doc["status"] == "draft"
        assert len(doc["partitions"]) == 4

    def test_unknown_model(self, client):
        r = client.post("/sessions", json={"model": "mystery", "partitions": [],
                                           "covariates": []})
        assert r.status_code == 404
        assert r.json()["error"] == "UnknownModel"

    def test_overlapping_bins_rejected(self, client):
        body = {"model": "gaussian-mixture",
                "partitions": [{"bins": [
                    {"lower": ["-inf"], "upper": [1.0]},
                    {"lower": [0.0], "upper": ["inf"]}]}],
                "covariates": [{"x": [], "label": "all"}]}
        r = client.post("/sessions", json=body)
        assert r.status_code == 400
        assert r.json()["error"] == "InvalidPartition"
        assert "overlap" in r.json()["message"]

    def test_get_unknown_session_is_404(self, client):
        assert client.get("/sessions/nope").status_code == 404


class TestJudgements:
    def test_chips_normalize(self, client):
        sid = _mixture_session(client)["id"]
        chips = [0, 2, 3, 3, 2, 0]
        r = client.post(f"/sessions/{sid}/judgements",
                        json={"judgements": [{"covariate": "all",
                                              "chips": chips}]})
        doc = r.json()
        p = doc["judgements"]["judgements"][0]["p"]
        np.testing.assert_allclose(p[1:5], [0.2, 0.3, 0.3, 0.2], atol=1e-6)
        assert doc["judgement_hash"]

    def test_quantile_thresholds_replace_partition(self, client):
        thresholds = {"0": [60, 68, 74, 80, 88], "2.5": [88, 93, 97, 101, 106],
                      "10": [125, 132, 138, 144, 151],
                      "17.5": [160, 167, 174, 181, 189]}
        body = {"model": "growth-weibull",
                "partitions": [{"bins": [
                    {"lower": [0.0], "upper": [150.0]},
                    {"lower": [150.0], "upper": ["inf"]}]}] * 4,
                "covariates": [{"x": [t], "label": f"t={t}"}
                               for t in (0.0, 2.5, 10.0, 17.5)]}
        sid = client.post("/sessions", json=body).json()["id"]
        payload = [{"covariate": f"t={t}", "thresholds": thresholds[f"{t:g}"]}
                   for t in (0.0, 2.5, 10.0, 17.5)]
        r = client.post(f"/sessions/{sid}/judgements",
                        json={"judgements": payload})
        doc = r.json()
        assert len(doc["partitions"][0]["bins"]) == 6
        np.testing.assert_allclose(doc["judgements"]["judgements"][0]["p"],
                                   [0.10, 0.15, 0.25, 0.25, 0.15, 0.10],
                                   atol=1e-9)

    def test_nonincreasing_thresholds_rejected(self, client):
        sid = _mixture_session(client)["id"]
        r = client.post(f"/sessions/{sid}/judgements",
                        json={"judgements": [{"covariate": "all",
                                              "thresholds": [1, 3, 2, 4, 5]}]})
        assert r.status_code == 400
        assert r.json()["error"] == "NonIncreasingThresholds"

    def test_all_zero_chips_rejected(self, client):
        sid = _mixture_session(client)["id"]
        r = client.post(f"/sessions/{sid}/judgements",
                        json={"judgements": [{"covariate": "all",
                                              "chips": [0] * 6}]})
        assert r.status_code == 400
        assert r.json()["error"] == "AllZeroChips"


class TestFitFlow:
    def test_background_fit_and_status(self, client):
        sid = _mixture_session(client)["id"]
        _submit_balanced(client, sid)
        status = _fit_and_wait(client, sid, config={"seed": 3})
        assert status["state"] == "done"
        assert status["status"] == "fitted"
        assert status["alpha_band"] in ("poor", "moderate", "close")
        doc = client.get(f"/sessions/{sid}").json()
        assert doc["status"] == "fitted"
        assert doc["fit"]["alpha"]["alpha_hat"] > 0
        assert doc["config_hash"] and doc["judgement_hash"]

    def test_fit_without_judgements_fails(self, client):
        sid = _mixture_session(client)["id"]
        r = client.post(f"/sessions/{sid}/fit", json={})
        assert r.status_code == 422
        assert "NoJudgements" in r.json()["message"]

    def test_edit_after_fit_goes_stale(self, client):
        sid = _mixture_session(client)["id"]
        _submit_balanced(client, sid)
        _fit_and_wait(client, sid, config={"seed": 3})
        doc = _submit_balanced(client, sid)
        assert doc["status"] == "stale"

    def test_repeat_fit_same_seed_identical(self, client):
        sid = _mixture_session(client)["id"]
        _submit_balanced(client, sid)
        _fit_and_wait(client, sid, config={"seed": 3})
        first = client.get(f"/sessions/{sid}").json()["fit"]
        _fit_and_wait(client, sid, config={"seed": 3})
        second = client.get(f"/sessions/{sid}").json()["fit"]
        assert json.dumps(first, sort_keys=True) == \
            json.dumps(second, sort_keys=True)


class TestPredictive:
    def test_density_integrates_to_one(self, client):
        sid = _mixture_session(client)["id"]
        _submit_balanced(client, sid)
        _fit_and_wait(client, sid, config={"seed": 3})
        r = client.get(f"/sessions/{sid}/predictive",
                       params={"covariate": "all", "from": -8, "to": 8,
                               "points": 201})
        assert r.status_code == 200
        doc = r.json()
        grid = np.asarray(doc["grid"])
        dens = np.asarray(doc["density"])
        assert abs(np.trapezoid(dens, grid) - 1.0) < 1e-3
        cdf = np.asarray(doc["cdf"])
        assert np.all(np.diff(cdf) >= -1e-12)
        assert doc["expert_p"] is not None

    def test_unfitted_predictive_is_conflict(self, client):
        sid = _mixture_session(client)["id"]
        r = client.get(f"/sessions/{sid}/predictive")
        assert r.status_code == 409
        assert r.json()["error"] == "NotFitted"

    def test_probit_two_atom_predictive(self, client):
        body = {"model": "probit-glm",
                "model_options": {"n_coefficients": 2},
                "partitions": [{"atoms": [0, 1]}] * 2,
                "covariates": [{"x": [1.0, 0.0], "label": "a"},
                               {"x": [0.0, 1.0], "label": "b"}]}
        sid = client.post("/sessions", json=body).json()["id"]
        payload = [{"covariate": "a", "p": [0.3, 0.7]},
                   {"covariate": "b", "p": [0.6, 0.4]}]
        client.post(f"/sessions/{sid}/judgements",
                    json={"judgements": payload})
        _fit_and_wait(client, sid, config={"seed": 1})
        r = client.get(f"/sessions/{sid}/predictive", params={"covariate": "a"})
        doc = r.json()
        assert doc["atoms"] == [0.0, 1.0]
        assert abs(sum(doc["bin_probabilities"]) - 1.0) < 1e-9


class TestPersistence:
    def test_round_trip_bytes(self, tmp_path):
        store = SessionStore(str(tmp_path))
        session = store.create_session(
            "gaussian-mixture", [MIXTURE_PARTITION], [{"x": [], "label": "all"}])
        path = os.path.join(str(tmp_path), f"{session.id}.json")
        with open(path, "rb") as fh:
            first = fh.read()
        loaded = store.load(session.id)
        store._save(loaded)
        with open(path, "rb") as fh:
            second = fh.read()
        assert first == second

    def test_env_var_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PRIOR_FORGE_DATA_DIR", str(tmp_path / "envdir"))
        store = SessionStore()
        assert store.data_dir == str(tmp_path / "envdir")

    def test_alpha_band_thresholds(self):
        assert alpha_band(2.0) == "poor"
        assert alpha_band(5.0) == "moderate"
        assert alpha_band(50.0) == "moderate"
        assert alpha_band(51.0) == "close"

    def test_cancel_flag_reaches_job(self, tmp_path):
        store = SessionStore(str(tmp_path))
        session = store.create_session(
            "gaussian-mixture", [MIXTURE_PARTITION], [{"x": [], "label": "all"}])
        store.submit_judgements(session.id, [
            {"covariate": "all", "p": [0.05, 0.15, 0.30, 0.30, 0.15, 0.05]}])
        store.start_fit(session.id, {"seed": 0}, background=True)
        store.cancel_fit(session.id)
        deadline = time.time() + 30
        while time.time() < deadline:
            if store.fit_status(session.id)["state"] in ("done", "failed"):
                break
            time.sleep(0.05)
        assert store.fit_status(session.id)["state"] in ("done", "failed")
