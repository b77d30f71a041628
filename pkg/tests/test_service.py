import json
import time
from pathlib import Path

import pytest
from fastapi.testclient import TestClient
from jsonschema import validate as js_validate

from taxoalign.datasets import demo_text
from taxoalign.service import create_app

SCHEMA_DIR = Path(__file__).parent.parent / "src" / "taxoalign" / "schemas"


def schema(name):
    return json.loads((SCHEMA_DIR / f"{name}.json").read_text())


@pytest.fixture
def client(tmp_path):
    app = create_app(data_dir=str(tmp_path / "sessions"))
    with TestClient(app) as c:
        yield c


def wait_for(client, response, url, params=None, tries=500):
    """Follow the 202 + poll contract until the endpoint answers."""
    while response.status_code == 202:
        body = response.json()
        js_validate(body, schema("pending"))
        for _ in range(tries):
            job = client.get(body["poll"]).json()
            js_validate(job, schema("job"))
            if job["status"] != "running":
                break
            time.sleep(0.01)
        response = client.get(url, params=params)
    return response


def upload(client, text=None, coverage=True):
    r = client.post("/api/session", json={"text": text or demo_text(), "coverage": coverage})
    assert r.status_code == 200, r.text
    return r.json()["session_id"]


def repaired_session(client):
    sid = upload(client)
    assert client.post(f"/api/session/{sid}/repair", json={"remove": [5]}).status_code == 200
    r = wait_for(client, client.get(f"/api/session/{sid}/worlds"), f"/api/session/{sid}/worlds")
    assert r.status_code == 200
    return sid


class TestSessionLifecycle:
    def test_create_and_summary(self, client):
        sid = upload(client)
        r = client.get(f"/api/session/{sid}")
        assert r.status_code == 200
        body = r.json()
        js_validate(body, schema("session"))
        assert body["taxonomies"][0]["concepts"] == 5
        assert len(body["articulations"]) == 6

    def test_parse_errors_are_400_with_spans(self, client):
        r = client.post("/api/session", json={"text": "garbage\n[1.A equals 2.B]"})
        assert r.status_code == 400
        body = r.json()
        js_validate(body, schema("error"))
        assert body["issues"]
        assert all("line" in i for i in body["issues"])

    def test_malformed_body(self, client):
        assert client.post("/api/session", json={"nope": 1}).status_code == 400

    def test_unknown_session_404(self, client):
        assert client.get("/api/session/doesnotexist").status_code == 404


class TestConsistencyAndRepair:
    def test_inconsistent_then_repair(self, client):
        sid = upload(client)
        r = client.get(f"/api/session/{sid}/consistency")
        js_validate(r.json(), schema("consistency"))
        assert r.json() == {"consistent": False}

        r = client.get(f"/api/session/{sid}/diagnosis")
        assert r.status_code == 200
        body = r.json()
        js_validate(body, schema("diagnosis"))
        assert 5 in body["mus"]
        assert body["repairs"] == [5]
        assert "[1.D includes 2.A]" in body["articulations"]["5"]

        r = client.post(f"/api/session/{sid}/repair", json={"remove": [5]})
        assert r.status_code == 200
        assert client.get(f"/api/session/{sid}/consistency").json() == {"consistent": True}

    def test_restore_articulation(self, client):
        sid = upload(client)
        client.post(f"/api/session/{sid}/repair", json={"remove": [5]})
        client.post(f"/api/session/{sid}/repair", json={"restore": [5]})
        assert client.get(f"/api/session/{sid}/consistency").json() == {"consistent": False}
        summary = client.get(f"/api/session/{sid}").json()
        assert not any(a["disabled"] for a in summary["articulations"])

    def test_diagnosis_on_consistent_is_422(self, client):
        sid = upload(client)
        client.post(f"/api/session/{sid}/repair", json={"remove": [5]})
        assert client.get(f"/api/session/{sid}/diagnosis").status_code == 422

    def test_worlds_while_inconsistent_is_422(self, client):
        sid = upload(client)
        assert client.get(f"/api/session/{sid}/worlds").status_code == 422

    def test_bad_repair_index(self, client):
        sid = upload(client)
        assert client.post(f"/api/session/{sid}/repair", json={"remove": [99]}).status_code == 400


class TestWorldsAndMir:
    def test_worlds_with_polling(self, client):
        sid = upload(client)
        client.post(f"/api/session/{sid}/repair", json={"remove": [5]})
        r = wait_for(client, client.get(f"/api/session/{sid}/worlds"), f"/api/session/{sid}/worlds")
        assert r.status_code == 200
        body = r.json()
        js_validate(body, schema("worlds"))
        assert body["count"] == 7
        assert not body["truncated"]

    def test_worlds_limit_param(self, client):
        sid = repaired_session(client)
        r = client.get(f"/api/session/{sid}/worlds", params={"limit": 2})
        body = r.json()
        assert body["count"] == 2 and body["truncated"]

    def test_mir(self, client):
        sid = repaired_session(client)
        r = client.get(f"/api/session/{sid}/mir")
        assert r.status_code == 200
        body = r.json()
        js_validate(body, schema("mir"))
        entry = next(e for e in body["entries"] if (e["left"], e["right"]) == ("1.D", "2.A"))
        assert entry["mask"] == ["is_included_in"]

    def test_gets_are_idempotent(self, client):
        sid = repaired_session(client)
        first = client.get(f"/api/session/{sid}/mir").text
        second = client.get(f"/api/session/{sid}/mir").text
        assert first == second


class TestReductionApi:
    def test_question_answer_flow(self, client):
        sid = repaired_session(client)
        r = client.get(f"/api/session/{sid}/question")
        body = r.json()
        js_validate(body, schema("question"))
        assert body["surviving"] == 7
        q = body["question"]
        assert (q["left"], q["right"]) == ("1.A", "2.G")
        assert {c["symbol"]: c["worlds"] for c in q["candidates"]} == {">": 3, "><": 4}

        r = client.post(
            f"/api/session/{sid}/answer",
            json={"left": "1.A", "right": "2.G", "relations": ["includes"]},
        )
        assert r.status_code == 200
        js_validate(r.json(), schema("answer"))
        assert r.json() == {"surviving": 3}

    def test_answer_idempotent(self, client):
        sid = repaired_session(client)
        payload = {"left": "1.A", "right": "2.G", "relations": [">"]}
        first = client.post(f"/api/session/{sid}/answer", json=payload).json()
        second = client.post(f"/api/session/{sid}/answer", json=payload).json()
        assert first == second == {"surviving": 3}

    def test_full_mask_answer_keeps_count(self, client):
        sid = repaired_session(client)
        r = client.post(
            f"/api/session/{sid}/answer",
            json={"left": "1.A", "right": "2.G",
                  "relations": ["==", "<", ">", "><", "!"]},
        )
        assert r.json() == {"surviving": 7}

    def test_empty_answer_is_409(self, client):
        sid = repaired_session(client)
        r = client.post(
            f"/api/session/{sid}/answer",
            json={"left": "1.A", "right": "2.G", "relations": ["disjoint"]},
        )
        assert r.status_code == 409
        assert client.get(f"/api/session/{sid}/question").json()["surviving"] == 7

    def test_unknown_pair_404(self, client):
        sid = repaired_session(client)
        r = client.post(
            f"/api/session/{sid}/answer",
            json={"left": "1.A", "right": "2.Z", "relations": [">"]},
        )
        assert r.status_code == 404

    def test_reset_answers(self, client):
        sid = repaired_session(client)
        client.post(f"/api/session/{sid}/answer",
                    json={"left": "1.A", "right": "2.G", "relations": [">"]})
        r = client.post(f"/api/session/{sid}/reset-answers")
        assert r.json() == {"surviving": 7}


class TestVisualizationApi:
    def test_rcg(self, client):
        sid = repaired_session(client)
        r = client.get(f"/api/session/{sid}/rcg/0")
        assert r.status_code == 200
        assert r.text.startswith("digraph rcg {")
        assert client.get(f"/api/session/{sid}/rcg/99").status_code == 404

    def test_cluster(self, client):
        sid = repaired_session(client)
        r = client.get(f"/api/session/{sid}/cluster")
        body = r.json()
        js_validate(body, schema("cluster"))
        assert body["csv"].splitlines()[0] == "world,0,1,2,3,4,5,6"

    def test_provenance(self, client):
        sid = repaired_session(client)
        params = {"left": "1.D", "right": "2.A", "mask": "<"}
        url = f"/api/session/{sid}/provenance"
        r = wait_for(client, client.get(url, params=params), url, params=params)
        assert r.status_code == 200
        body = r.json()
        js_validate(body, schema("provenance"))
        assert [a["index"] for a in body["articulations"]] == [3]


class TestPersistence:
    def test_restart_reproduces_responses(self, tmp_path):
        data_dir = str(tmp_path / "sessions")
        app = create_app(data_dir=data_dir)
        with TestClient(app) as client:
            sid = repaired_session(client)
            client.post(f"/api/session/{sid}/answer",
                        json={"left": "1.A", "right": "2.G", "relations": [">"]})
            mir_before = client.get(f"/api/session/{sid}/mir").text
            question_before = client.get(f"/api/session/{sid}/question").text

        fresh = create_app(data_dir=data_dir)
        with TestClient(fresh) as client:
            url = f"/api/session/{sid}/mir"
            r = wait_for(client, client.get(url), url)
            assert r.text == mir_before
            assert client.get(f"/api/session/{sid}/question").text == question_before

    def test_corrupt_record_is_clean_error(self, tmp_path):
        data_dir = tmp_path / "sessions"
        data_dir.mkdir()
        (data_dir / "broken.json").write_text("{ not json", encoding="utf-8")
        app = create_app(data_dir=str(data_dir))
        with TestClient(app, raise_server_exceptions=False) as client:
            r = client.get("/api/session/broken")
            assert r.status_code == 500
            assert "corrupt session record" in r.json()["error"]

    def test_session_isolation(self, client):
        sid1 = repaired_session(client)
        sid2 = repaired_session(client)
        client.post(f"/api/session/{sid1}/answer",
                    json={"left": "1.A", "right": "2.G", "relations": [">"]})
        assert client.get(f"/api/session/{sid1}/question").json()["surviving"] == 3
        assert client.get(f"/api/session/{sid2}/question").json()["surviving"] == 7
