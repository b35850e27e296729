"""Session service protocol: lifecycle, errors, CLI parity, concurrency."""

import threading

import pytest
from fastapi.testclient import TestClient

from csptree.animator import Session
from csptree.registry import load_compiled
from csptree.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def new_session(client, model="patrol", **kw):
    r = client.post("/sessions", json={"model": model, **kw})
    assert r.status_code == 200, r.text
    return r.json()


class TestProtocol:
    def test_models_listed(self, client):
        names = client.get("/models").json()["models"]
        assert "patrol" in names and "chemical" in names

    def test_create_patrol(self, client):
        doc = new_session(client)
        assert doc["menu"]["kind"] == "choices"
        assert len(doc["menu"]["events"]) == 8
        assert doc["menu"]["events"][0]["channel"] == "Reset_PatrolMod"
        assert doc["menu"]["history_len"] == 0

    def test_create_chemical(self, client):
        doc = new_session(client, "chemical")
        assert len(doc["menu"]["events"]) == 22

    def test_unknown_model_404(self, client):
        r = client.post("/sessions", json={"model": "nope"})
        assert r.status_code == 404

    def test_bad_config_400(self, client):
        r = client.post("/sessions", json={"model": "patrol", "config": {"max_int": -5}})
        assert r.status_code == 400

    def test_choice_advances(self, client):
        doc = new_session(client)
        sid = doc["session_id"]
        menu = client.post(f"/sessions/{sid}/choice", json={"index": 2}).json()
        assert [e["channel"] for e in menu["events"]] == ["Right_PatrolMod"]
        assert menu["events"][0]["payload_text"] == "(Dout,-2)"
        assert menu["history_len"] == 1

    def test_invalid_index_leaves_state(self, client):
        doc = new_session(client)
        sid = doc["session_id"]
        r = client.post(f"/sessions/{sid}/choice", json={"index": 99})
        assert r.status_code == 400
        hist = client.get(f"/sessions/{sid}/history").json()["history"]
        assert hist == []

    def test_stale_session_404(self, client):
        assert client.post("/sessions/nope/choice", json={"index": 1}).status_code == 404

    def test_history_and_reset(self, client):
        doc = new_session(client)
        sid = doc["session_id"]
        for idx in (2, 1, 1):
            client.post(f"/sessions/{sid}/choice", json={"index": idx})
        hist = client.get(f"/sessions/{sid}/history").json()["history"]
        assert [h["text"] for h in hist] == [
            "Cal_PatrolMod (Din,-3)",
            "Right_PatrolMod (Dout,-2)",
            "Right_PatrolMod (Dout,-2)",
        ]
        menu = client.post(f"/sessions/{sid}/reset").json()
        assert menu["history_len"] == 0
        assert client.get(f"/sessions/{sid}/history").json()["history"] == []

    def test_terminated_session_409(self, client):
        doc = new_session(client, "chemical")
        sid = doc["session_id"]
        for idx in (1, 9, 1, 1):
            r = client.post(f"/sessions/{sid}/choice", json={"index": idx})
        assert r.json()["kind"] == "terminated"
        r = client.post(f"/sessions/{sid}/choice", json={"index": 1})
        assert r.status_code == 409 and "terminated" in r.text
        # history still readable
        hist = client.get(f"/sessions/{sid}/history").json()["history"]
        assert len(hist) == 4


def test_menu_parity_with_cli_lines(client):
    """The protocol payload reconstructs the CLI menu byte for byte."""
    doc = new_session(client)
    sid = doc["session_id"]
    session = Session(load_compiled("patrol"))
    path = [2, 1, 1, 1, 1, 1, 1]
    menu_doc = doc["menu"]
    for idx in path:
        wire = [
            f"({e['index']}) {e['channel']} {e['payload_text']}"
            for e in menu_doc["events"]
        ]
        assert wire == session.menu.lines()
        menu_doc = client.post(f"/sessions/{sid}/choice", json={"index": idx}).json()
        session.choose_index(idx)


def test_concurrent_sessions_do_not_interleave(client):
    paths = [
        [2, 1, 1, 1, 1, 1, 1],
        [6, 1, 1, 1, 1],
        [8, 1, 1],
        [1],
        [5],
        [3, 1, 1, 1],
        [7, 1],
        [4, 1, 1],
    ]
    sids = [new_session(client)["session_id"] for _ in paths]
    errors = []

    def run(sid, path):
        try:
            for idx in path:
                r = client.post(f"/sessions/{sid}/choice", json={"index": idx})
                assert r.status_code == 200, r.text
        except Exception as exc:  # surface in the main thread
            errors.append(exc)

    threads = [threading.Thread(target=run, args=(sid, p)) for sid, p in zip(sids, paths)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    # each session's history is exactly its own path, replayed consistently
    expected_first = {
        2: "Cal_PatrolMod (Din,-3)",
        6: "Cal_PatrolMod (Din,1)",
        8: "Cal_PatrolMod (Din,3)",
        1: "Reset_PatrolMod Din",
        5: "Cal_PatrolMod (Din,0)",
        3: "Cal_PatrolMod (Din,-2)",
        7: "Cal_PatrolMod (Din,2)",
        4: "Cal_PatrolMod (Din,-1)",
    }
    for sid, path in zip(sids, paths):
        hist = client.get(f"/sessions/{sid}/history").json()["history"]
        assert len(hist) == len(path)
        assert hist[0]["text"] == expected_first[path[0]]


def test_sessions_expire(client):
    app = create_app(idle_timeout=0.0)
    c = TestClient(app)
    sid = c.post("/sessions", json={"model": "patrol"}).json()["session_id"]
    import time

    time.sleep(0.01)
    assert c.post(f"/sessions/{sid}/choice", json={"index": 1}).status_code == 404


def test_static_ui_served_when_built():
    import pathlib

    dist = pathlib.Path(__file__).resolve().parent.parent / "frontend" / "dist"
    if not (dist / "index.html").exists():
        pytest.skip("frontend not built")
    c = TestClient(create_app(static_dir=dist))
    r = c.get("/")
    assert r.status_code == 200 and "csptree animator" in r.text
    assert c.get("/app.js").status_code == 200
