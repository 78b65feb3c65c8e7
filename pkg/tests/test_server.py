import pytest
from fastapi.testclient import TestClient

from lexparse.grammar import generate_dataset
from lexparse.harness import EpisodeConfig, run_episode
from lexparse.server import create_app
from lexparse.types import Instance


@pytest.fixture(scope="module")
def stream(grammar):
    return [
        Instance(i.x, i.y, i.k_gold, i.domain)
        for i in generate_dataset(grammar, 5, seed=900)
    ]


@pytest.fixture
def client(stream, tmp_path):
    app = create_app(stream, EpisodeConfig(), state_dir=tmp_path / "state")
    with TestClient(app) as c:
        yield c


def new_session(client):
    resp = client.post("/sessions")
    assert resp.status_code == 200
    return resp.json()["id"]


class TestSessionLifecycle:
    def test_create_and_info(self, client, stream):
        sid = new_session(client)
        info = client.get(f"/sessions/{sid}").json()
        assert info == {
            "id": sid,
            "status": "ACTIVE",
            "t": 0,
            "stream_size": len(stream),
            "kb_size": 0,
        }

    def test_unknown_session_is_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/parse").status_code == 404

    def test_finishes_after_last_instance(self, client, stream):
        sid = new_session(client)
        for i in range(len(stream)):
            resp = client.post(f"/sessions/{sid}/parse")
            assert resp.status_code == 200
        assert resp.json()["status"] == "FINISHED"
        assert client.post(f"/sessions/{sid}/parse").status_code == 409
        assert client.get(f"/sessions/{sid}/next").status_code == 409

    def test_sessions_are_independent(self, client):
        a, b = new_session(client), new_session(client)
        client.post(f"/sessions/{a}/parse")
        assert client.get(f"/sessions/{b}").json()["t"] == 0


class TestParsing:
    def test_next_peeks_without_advancing(self, client, stream):
        sid = new_session(client)
        peek = client.get(f"/sessions/{sid}/next").json()
        assert peek == client.get(f"/sessions/{sid}/next").json()
        assert peek["t"] == 1
        assert peek["x"] == stream[0].x

    def test_parse_returns_record_and_grows_kb(self, client, stream):
        sid = new_session(client)
        body = client.post(f"/sessions/{sid}/parse").json()
        rec = body["record"]
        assert rec["t"] == 1
        assert rec["x"] == stream[0].x
        assert body["kb_size"] == len(rec["k_new_added"]) == rec["kb_size_after"]

    def test_expert_entry_visible_in_kb_and_retrieval(self, client):
        sid = new_session(client)
        resp = client.post(
            f"/sessions/{sid}/lexicon",
            json={"entries": [{"key": "the lease timer", "value": "lease_timer"}]},
        )
        assert resp.json()["added"] == 1
        kb = client.get(f"/sessions/{sid}/kb").json()
        assert [e["value"] for e in kb["entries"]] == ["lease_timer"]
        assert kb["entries"][0]["source"] == "EXPERT_UI"

    def test_invalid_entry_is_422(self, client):
        sid = new_session(client)
        resp = client.post(
            f"/sessions/{sid}/lexicon", json={"entries": [{"key": "  ", "value": "v"}]}
        )
        assert resp.status_code == 422

    def test_duplicate_submission_not_readded(self, client):
        sid = new_session(client)
        entry = {"entries": [{"key": "k phrase", "value": "v"}]}
        client.post(f"/sessions/{sid}/lexicon", json=entry)
        resp = client.post(f"/sessions/{sid}/lexicon", json=entry)
        assert resp.json() == {"added": 0, "submitted": 1, "kb_size": 1}

    def test_report_requires_at_least_one_parse(self, client):
        sid = new_session(client)
        assert client.get(f"/sessions/{sid}/report").status_code == 409
        client.post(f"/sessions/{sid}/parse")
        rep = client.get(f"/sessions/{sid}/report").json()
        assert rep["reading_cost"] == 1


class TestOfflineParity:
    def test_api_records_match_offline_run(self, stream, tmp_path):
        app = create_app(stream, EpisodeConfig(), state_dir=tmp_path / "s")
        with TestClient(app) as client:
            sid = new_session(client)
            api_records = [
                client.post(f"/sessions/{sid}/parse").json()["record"]
                for _ in stream
            ]
        offline, _ = run_episode(stream, EpisodeConfig())
        assert api_records == [r.to_dict() for r in offline]


class TestPersistence:
    def test_session_survives_restart(self, stream, tmp_path):
        state = tmp_path / "state"
        app = create_app(stream, EpisodeConfig(), state_dir=state)
        with TestClient(app) as client:
            sid = new_session(client)
            client.post(f"/sessions/{sid}/parse")
            client.post(
                f"/sessions/{sid}/lexicon",
                json={"entries": [{"key": "extra phrase", "value": "extra"}]},
            )
            before_kb = client.get(f"/sessions/{sid}/kb").json()

        restarted = create_app(stream, EpisodeConfig(), state_dir=state)
        with TestClient(restarted) as client:
            info = client.get(f"/sessions/{sid}").json()
            assert info["t"] == 1
            assert client.get(f"/sessions/{sid}/kb").json() == before_kb
            # parsing continues from where the previous process stopped
            rec = client.post(f"/sessions/{sid}/parse").json()["record"]
            assert rec["t"] == 2
            assert rec["x"] == stream[1].x
