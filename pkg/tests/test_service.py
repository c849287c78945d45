from __future__ import annotations

import json
from datetime import date

import pytest
from fastapi.testclient import TestClient

import fundwatch as fw
from fundwatch.casepipeline import RunProfile, RunStore, investigate, run_batch
from fundwatch.service import create_app

G = fw.PeriodGranularity
TOKEN = {"X-Analyst-Token": "analyst"}

SPEC = fw.PopulationSpec(
    n_customers=300,
    injections=(
        fw.InjectionSpec(fw.PatternKind.RAPID_IN_OUT, 5),
        fw.InjectionSpec(fw.PatternKind.EXCHANGE_ROUND_TRIP, 3),
    ),
    rng_seed=21,
)
PROFILE = RunProfile(
    network=fw.NetworkConfig(training_cycles=600, rng_seed=1),
    created_at="2001-01-01T00:00:00Z",
)


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    records, truth = fw.generate(SPEC)
    records, _ = fw.clean_mapping_errors(records)
    store = RunStore(tmp_path_factory.mktemp("runs"))
    run_id = run_batch(records, PROFILE, store, run_id="svc")
    client = TestClient(create_app(store, analyst_token="analyst"))
    return client, store, run_id, truth


class TestRuns:
    def test_list_runs(self, service):
        client, _, run_id, _ = service
        body = client.get("/runs").json()
        assert [r["run_id"] for r in body["runs"]] == [run_id]
        assert body["runs"][0]["granularities"] == ["Day", "Week", "Month"]

    def test_run_detail(self, service):
        client, _, run_id, _ = service
        body = client.get(f"/runs/{run_id}").json()
        assert body["config"]["thresholds"] == {"s": 0.4, "S": 0.4}
        assert set(body["models"]) == {"Day", "Week", "Month"}

    def test_unknown_run_404(self, service):
        client, *_ = service
        resp = client.get("/runs/nope")
        assert resp.status_code == 404
        assert resp.json()["code"] == "not_found"


class TestPoints:
    def test_pagination(self, service):
        client, _, run_id, _ = service
        first = client.get(f"/runs/{run_id}/points", params={"granularity": "Day", "page_size": 50}).json()
        assert len(first["points"]) == 50
        assert first["total"] > 50
        second = client.get(
            f"/runs/{run_id}/points", params={"granularity": "Day", "page_size": 50, "page": 2}
        ).json()
        assert first["points"][0] != second["points"][0]

    def test_screened_filter(self, service):
        client, _, run_id, _ = service
        body = client.get(
            f"/runs/{run_id}/points", params={"granularity": "Day", "screened": "true", "page_size": 10000}
        ).json()
        assert body["total"] > 0
        assert all(p["screened"] for p in body["points"])
        assert all(p["cluster"] is not None for p in body["points"])

    def test_seeded_sample_is_stable(self, service):
        client, _, run_id, _ = service
        params = {"granularity": "Day", "sample": 20, "sample_seed": 5, "page_size": 100}
        a = client.get(f"/runs/{run_id}/points", params=params).json()
        b = client.get(f"/runs/{run_id}/points", params=params).json()
        assert a["points"] == b["points"]
        assert len(a["points"]) == 20

    def test_bad_granularity_422(self, service):
        client, _, run_id, _ = service
        resp = client.get(f"/runs/{run_id}/points", params={"granularity": "Century"})
        assert resp.status_code == 422


class TestClusterLabeling:
    def test_label_round_trip(self, service):
        client, _, run_id, _ = service
        before = client.get(f"/runs/{run_id}/clusters", params={"granularity": "Week"}).json()
        ranked_second = before["suspicion_ranking"][1]
        resp = client.post(
            f"/runs/{run_id}/clusters/{ranked_second}/label",
            json={"label": "suspicious", "granularity": "Week"},
            headers=TOKEN,
        )
        assert resp.status_code == 200
        after = client.get(f"/runs/{run_id}/clusters", params={"granularity": "Week"}).json()
        assert after["labels"][str(ranked_second)] == "suspicious"
        assert after["suspicious"] == ranked_second

    def test_label_requires_token(self, service):
        client, _, run_id, _ = service
        resp = client.post(
            f"/runs/{run_id}/clusters/0/label", json={"label": "normal", "granularity": "Day"}
        )
        assert resp.status_code == 401

    def test_label_bad_cluster_422(self, service):
        client, _, run_id, _ = service
        resp = client.post(
            f"/runs/{run_id}/clusters/99/label",
            json={"label": "normal", "granularity": "Day"},
            headers=TOKEN,
        )
        assert resp.status_code == 422

    def test_label_bad_body_422(self, service):
        client, _, run_id, _ = service
        resp = client.post(
            f"/runs/{run_id}/clusters/0/label", json={"label": "meh"}, headers=TOKEN
        )
        assert resp.status_code == 422
        assert resp.json()["code"] == "invalid_body"


class TestTrain:
    def test_retrain_returns_fingerprints(self, service):
        client, _, run_id, _ = service
        resp = client.post(f"/runs/{run_id}/train", json={"created_at": "2001-03-03T00:00:00Z"}, headers=TOKEN)
        assert resp.status_code == 200
        assert set(resp.json()["models"]) == {"Day", "Week", "Month"}

    def test_busy_store_409(self, service):
        client, store, run_id, _ = service
        lock = store.writer_lock()
        try:
            resp = client.post(f"/runs/{run_id}/train", headers=TOKEN)
            assert resp.status_code == 409
            assert resp.json()["code"] == "busy"
        finally:
            lock.release()

    def test_mutation_blocked_while_busy(self, service):
        client, store, run_id, _ = service
        lock = store.writer_lock()
        try:
            resp = client.post(
                f"/runs/{run_id}/clusters/0/label",
                json={"label": "normal", "granularity": "Month"},
                headers=TOKEN,
            )
            assert resp.status_code == 409
        finally:
            lock.release()


class TestInvestigateAndCases:
    def test_investigate_matches_library_bitwise(self, service):
        client, store, run_id, truth = service
        cid = sorted(truth.entries)[0]
        when = truth.entries[cid].dates[-1]
        resp = client.post(
            f"/runs/{run_id}/investigate",
            json={"customer_id": cid, "date": when.isoformat()},
            headers=TOKEN,
        )
        assert resp.status_code == 200
        got = resp.json()
        expected = investigate(store, run_id, cid, None, when)
        assert got["degrees"] == {g.value: d for g, d in expected.degrees.items()}
        assert got["alert_level"] == expected.alert_level.value

    def test_investigate_unknown_customer_404(self, service):
        client, _, run_id, _ = service
        resp = client.post(
            f"/runs/{run_id}/investigate",
            json={"customer_id": "NOPE", "date": "2000-06-01"},
            headers=TOKEN,
        )
        assert resp.status_code == 404

    def test_cases_ranked_and_filtered(self, service):
        client, store, run_id, truth = service
        for cid in sorted(truth.entries)[:4]:
            client.post(
                f"/runs/{run_id}/investigate",
                json={"customer_id": cid, "date": truth.entries[cid].dates[0].isoformat()},
                headers=TOKEN,
            )
        body = client.get(f"/runs/{run_id}/cases").json()
        degrees = [c["max_degree"] for c in body["cases"]]
        assert degrees == sorted(degrees, reverse=True)
        alerts = client.get(f"/runs/{run_id}/cases", params={"alert": "Alert"}).json()
        assert all(c["alert_level"] == "Alert" for c in alerts["cases"])
        assert all(max(c["degrees"].values()) >= 0.8 for c in alerts["cases"])

    def test_case_detail_with_timeline(self, service):
        client, _, run_id, truth = service
        cid = sorted(truth.entries)[0]
        when = truth.entries[cid].dates[0]
        created = client.post(
            f"/runs/{run_id}/investigate",
            json={"customer_id": cid, "date": when.isoformat()},
            headers=TOKEN,
        ).json()
        detail = client.get(f"/runs/{run_id}/cases/{created['case_id']}").json()
        assert detail["customer_id"] == cid
        assert len(detail["timeline"]) >= 1

    def test_disposition_round_trip_and_durability(self, service):
        client, store, run_id, truth = service
        cid = sorted(truth.entries)[1]
        when = truth.entries[cid].dates[0]
        case = client.post(
            f"/runs/{run_id}/investigate",
            json={"customer_id": cid, "date": when.isoformat()},
            headers=TOKEN,
        ).json()
        resp = client.post(
            f"/runs/{run_id}/cases/{case['case_id']}/disposition",
            json={"disposition": "Exchange", "note": "sub-fund switch"},
            headers=TOKEN,
        )
        assert resp.status_code == 200
        assert resp.json()["disposition"] == "Exchange"

        # a fresh app over the same directory sees the mutation (durability)
        fresh = TestClient(create_app(RunStore(store.root), analyst_token="analyst"))
        again = fresh.get(f"/runs/{run_id}/cases/{case['case_id']}").json()
        assert again["disposition"] == "Exchange"
        assert again["note"] == "sub-fund switch"

    def test_unknown_case_404(self, service):
        client, _, run_id, _ = service
        assert client.get(f"/runs/{run_id}/cases/ffffffffffffffff").status_code == 404
