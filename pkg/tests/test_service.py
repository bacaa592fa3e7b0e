"""HTTP service: endpoints, caching, error contract."""

import io
import json

import pytest
from fastapi.testclient import TestClient

from ocmine.examples import generate_order_item_route_log
from ocmine.io import write_mdl
from ocmine.service import create_app


@pytest.fixture(scope="module")
def mdl_text():
    log = generate_order_item_route_log(
        seed=1, n_orders=10, items_per_order=3, n_routes=2, batch_size=15)
    buf = io.StringIO()
    write_mdl(log, buf)
    return buf.getvalue()


@pytest.fixture()
def client():
    return TestClient(create_app(upload_cap_bytes=1024 * 1024))


@pytest.fixture()
def uploaded(client, mdl_text):
    resp = client.post("/logs", content=mdl_text)
    assert resp.status_code == 201
    return resp.json()["log_id"]


class TestUpload:
    def test_upload_reports_event_count(self, client, mdl_text):
        resp = client.post("/logs", content=mdl_text)
        assert resp.status_code == 201
        assert resp.json()["events"] == 54

    def test_oversized_upload_413(self, mdl_text):
        small = TestClient(create_app(upload_cap_bytes=10))
        resp = small.post("/logs", content=mdl_text)
        assert resp.status_code == 413
        assert resp.json()["error"] == "payload_too_large"

    def test_malformed_upload_422(self, client):
        resp = client.post("/logs", content="not,a,log\n1,2,3\n")
        assert resp.status_code == 422
        assert "detail" in resp.json()


class TestStatsAndDiagnostics:
    def test_stats(self, client, uploaded):
        resp = client.get(f"/logs/{uploaded}/stats")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["events"] == 54
        assert doc["object_types"]["orders"] == 10

    def test_unknown_log_404(self, client):
        resp = client.get("/logs/nope/stats")
        assert resp.status_code == 404
        assert resp.json()["error"] == "not_found"

    def test_diagnostics(self, client, uploaded):
        resp = client.get(f"/logs/{uploaded}/diagnostics", params={"type": "orders"})
        assert resp.status_code == 200
        assert resp.json()["deficient"] == 34

    def test_diagnostics_bad_type_422(self, client, uploaded):
        resp = client.get(f"/logs/{uploaded}/diagnostics", params={"type": "nope"})
        assert resp.status_code == 422


class TestDiscover:
    def test_discover_and_fetch_model(self, client, uploaded):
        resp = client.post(f"/logs/{uploaded}/discover",
                           json={"noise": 0.0, "tau": 0.98})
        assert resp.status_code == 201
        model_id = resp.json()["model_id"]
        doc = client.get(f"/models/{model_id}").json()
        assert doc["schema_version"] == 1
        assert "annotations" in doc

    def test_idempotent_per_params(self, client, uploaded):
        r1 = client.post(f"/logs/{uploaded}/discover", json={"tau": 0.98})
        r2 = client.post(f"/logs/{uploaded}/discover", json={"tau": 0.98})
        assert r1.json()["model_id"] == r2.json()["model_id"]
        assert r2.json()["cached"] is True

    def test_distinct_params_distinct_models(self, client, uploaded):
        r1 = client.post(f"/logs/{uploaded}/discover", json={"tau": 0.98})
        r2 = client.post(f"/logs/{uploaded}/discover", json={"tau": 0.0})
        assert r1.json()["model_id"] != r2.json()["model_id"]

    def test_invalid_params_422(self, client, uploaded):
        resp = client.post(f"/logs/{uploaded}/discover", json={"tau": 5})
        assert resp.status_code == 422

    def test_job_status(self, client, uploaded):
        model_id = client.post(f"/logs/{uploaded}/discover", json={}).json()["model_id"]
        job = client.get(f"/jobs/{model_id}").json()
        assert job["status"] == "done"


class TestModelViews:
    @pytest.fixture()
    def model_id(self, client, uploaded):
        return client.post(f"/logs/{uploaded}/discover", json={}).json()["model_id"]

    def test_dot(self, client, model_id):
        resp = client.get(f"/models/{model_id}/dot")
        assert resp.status_code == 200
        assert resp.text.startswith("digraph ocpn {")

    def test_transition_drilldown(self, client, model_id):
        resp = client.get(f"/models/{model_id}/transitions/place order")
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["frequency"] == 10
        assert doc["per_type"]["orders"]["mean_objects"] == 1.0

    def test_unknown_transition_404(self, client, model_id):
        assert client.get(f"/models/{model_id}/transitions/zz").status_code == 404

    def test_unknown_model_404(self, client):
        assert client.get("/models/zzz").status_code == 404


class TestFlatten:
    def test_flatten_download(self, client, uploaded):
        resp = client.post(f"/logs/{uploaded}/flatten", json={"type": "orders"})
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("text/csv")
        lines = resp.text.strip().splitlines()
        assert lines[0] == "case_id,event_id,activity,timestamp"
        assert len(lines) == 21

    def test_missing_type_422(self, client, uploaded):
        assert client.post(f"/logs/{uploaded}/flatten", json={}).status_code == 422
