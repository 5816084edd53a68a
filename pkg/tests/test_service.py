import json

import pytest
from fastapi.testclient import TestClient

from nergraph.service import create_app

from conftest import g0_payload


@pytest.fixture
def client():
    with TestClient(create_app()) as c:
        yield c


def make_session(client) -> str:
    response = client.post("/sessions", json=g0_payload())
    assert response.status_code == 201
    return response.json()["id"]


# --- lifecycle ----------------------------------------------------------------


def test_create_session(client):
    response = client.post("/sessions", json=g0_payload())
    assert response.status_code == 201
    body = response.json()
    assert body["revision"] == 0 and body["id"]


def test_create_invalid_file_lists_violations(client):
    payload = g0_payload()
    payload["links"][0]["confidence"] = 3.0
    payload["mentions"][0]["document"] = "dX"
    response = client.post("/sessions", json=payload)
    assert response.status_code == 400
    violations = response.json()["detail"]["violations"]
    assert len(violations) >= 2
    assert any("dX" in v["reason"] for v in violations)


def test_two_creates_two_ids(client):
    assert make_session(client) != make_session(client)


def test_max_sessions_enforced():
    with TestClient(create_app(max_sessions=2)) as client:
        make_session(client)
        make_session(client)
        response = client.post("/sessions", json=g0_payload())
        assert response.status_code == 429


def test_unknown_session_404(client):
    assert client.get("/sessions/nope/graph").status_code == 404
    assert client.post("/sessions/nope/undo").status_code == 404
    assert client.get("/sessions/nope/export").status_code == 404


def test_empty_corpus_session(client):
    empty = {"version": 1, "documents": [], "mentions": [], "entities": [], "links": []}
    response = client.post("/sessions", json=empty)
    assert response.status_code == 201
    sid = response.json()["id"]
    body = client.get(f"/sessions/{sid}/graph").json()
    assert body["nodes"] == [] and body["edges"] == [] and body["positions"] == {}
    stepped = client.post(f"/sessions/{sid}/layout", json={"action": "step", "steps": 3})
    assert stepped.status_code == 200


# --- views ---------------------------------------------------------------------


def test_get_view_dme_default(client):
    sid = make_session(client)
    body = client.get(f"/sessions/{sid}/graph", params={"mode": "dme"}).json()
    assert len(body["nodes"]) == 9
    assert len(body["edges"]) == 9  # collocation hidden by default
    assert body["revision"] == 0
    assert set(body["positions"]) == {n["key"] for n in body["nodes"]}


def test_get_view_de(client):
    sid = make_session(client)
    body = client.get(f"/sessions/{sid}/graph", params={"mode": "de"}).json()
    assert len(body["nodes"]) == 5
    assert len(body["edges"]) == 4
    kinds = {e["kind"] for e in body["edges"]}
    assert kinds == {"entity-document"}


def test_view_consistency_edges_reference_nodes(client):
    sid = make_session(client)
    for mode in ("dme", "de"):
        body = client.get(f"/sessions/{sid}/graph", params={"mode": mode}).json()
        node_keys = {n["key"] for n in body["nodes"]}
        for edge in body["edges"]:
            assert edge["a"] in node_keys and edge["b"] in node_keys


def test_set_filters_and_view(client):
    sid = make_session(client)
    response = client.put(
        f"/sessions/{sid}/filters",
        json={"ruleFilter": {"entityClasses": ["PER", "ORG", "MISC"]}},
    )
    assert response.status_code == 200
    body = client.get(f"/sessions/{sid}/graph", params={"mode": "dme"}).json()
    assert len(body["nodes"]) == 7


def test_focus_filter_over_wire(client):
    sid = make_session(client)
    response = client.put(f"/sessions/{sid}/filters", json={"focusState": {"focused": "entity:e1"}})
    assert response.status_code == 200
    body = client.get(f"/sessions/{sid}/graph").json()
    assert {n["key"] for n in body["nodes"]} == {"entity:e1", "mention:m1", "mention:m3"}


def test_bad_focus_key_400(client):
    sid = make_session(client)
    response = client.put(f"/sessions/{sid}/filters", json={"focusState": {"focused": "entity:zz"}})
    assert response.status_code == 400


# --- mutations -------------------------------------------------------------------


def test_mutation_and_stale_revision(client):
    sid = make_session(client)
    ok = client.post(
        f"/sessions/{sid}/ops",
        json={"expectedRevision": 0, "ops": [{"op": "deleteNode", "key": "mention:m2"}]},
    )
    assert ok.status_code == 200
    assert ok.json()["revision"] == 1

    stale = client.post(
        f"/sessions/{sid}/ops",
        json={"expectedRevision": 0, "ops": [{"op": "deleteNode", "key": "mention:m1"}]},
    )
    assert stale.status_code == 409
    assert stale.json()["detail"]["currentRevision"] == 1

    body = client.get(f"/sessions/{sid}/graph", params={"mode": "dme"}).json()
    assert len(body["nodes"]) == 8


def test_invalid_op_400(client):
    sid = make_session(client)
    response = client.post(
        f"/sessions/{sid}/ops",
        json={
            "expectedRevision": 0,
            "ops": [{"op": "addEdge", "edge": {"kind": "entity-document", "a": "entity:e1", "b": "document:d1"}}],
        },
    )
    assert response.status_code == 400


def test_undo_redo_over_wire(client):
    sid = make_session(client)
    client.post(
        f"/sessions/{sid}/ops",
        json={"expectedRevision": 0, "ops": [{"op": "deleteNode", "key": "mention:m2"}]},
    )
    undo = client.post(f"/sessions/{sid}/undo")
    assert undo.status_code == 200
    assert undo.json()["revision"] == 2
    body = client.get(f"/sessions/{sid}/graph").json()
    assert len(body["nodes"]) == 9
    redo = client.post(f"/sessions/{sid}/redo")
    assert redo.status_code == 200
    assert len(client.get(f"/sessions/{sid}/graph").json()["nodes"]) == 8


def test_undo_empty_history_400(client):
    sid = make_session(client)
    assert client.post(f"/sessions/{sid}/undo").status_code == 400


def test_merge_over_wire(client):
    sid = make_session(client)
    response = client.post(
        f"/sessions/{sid}/ops",
        json={"expectedRevision": 0, "ops": [{"op": "mergeEntities", "keep": "e1", "absorb": "e3"}]},
    )
    assert response.status_code == 200
    body = client.get(f"/sessions/{sid}/graph", params={"mode": "dme"}).json()
    assert "entity:e3" not in {n["key"] for n in body["nodes"]}


# --- layout ------------------------------------------------------------------------


def test_layout_step_zero_is_noop(client):
    sid = make_session(client)
    before = client.get(f"/sessions/{sid}/graph").json()
    response = client.post(f"/sessions/{sid}/layout", json={"action": "step", "steps": 0})
    assert response.status_code == 200
    body = response.json()
    assert body["revision"] == 0
    assert body["metrics"]["iterations"] == 0
    assert body["positions"] == before["positions"]


def test_layout_step_composition(client):
    first = make_session(client)
    second = make_session(client)
    for _ in range(2):
        client.post(f"/sessions/{first}/layout", json={"action": "step", "steps": 250})
    client.post(f"/sessions/{second}/layout", json={"action": "step", "steps": 500})
    positions_first = client.get(f"/sessions/{first}/graph").json()["positions"]
    positions_second = client.get(f"/sessions/{second}/graph").json()["positions"]
    assert positions_first == positions_second


def test_layout_start_conflict_and_stop(client):
    sid = make_session(client)
    start = client.post(f"/sessions/{sid}/layout", json={"action": "start", "steps": 200000})
    assert start.status_code == 200 and start.json()["running"]
    conflict = client.post(f"/sessions/{sid}/layout", json={"action": "start", "steps": 10})
    assert conflict.status_code == 409
    stop = client.post(f"/sessions/{sid}/layout", json={"action": "stop"})
    assert stop.status_code == 200 and not stop.json()["running"]


def test_mutation_stops_running_layout(client):
    sid = make_session(client)
    client.post(f"/sessions/{sid}/layout", json={"action": "start", "steps": 200000})
    response = client.post(
        f"/sessions/{sid}/ops",
        json={"expectedRevision": 0, "ops": [{"op": "setEntityTerm", "entity": "e1", "term": "X"}]},
    )
    assert response.status_code == 200
    follow_up = client.post(f"/sessions/{sid}/layout", json={"action": "start", "steps": 5})
    assert follow_up.status_code == 200
    client.post(f"/sessions/{sid}/layout", json={"action": "stop"})


def test_stream_frames_monotone_with_terminal(client):
    sid = make_session(client)
    client.post(f"/sessions/{sid}/layout", json={"action": "start", "steps": 4000})
    frames = []
    with client.stream("GET", f"/sessions/{sid}/layout/stream") as response:
        for line in response.iter_lines():
            if line:
                frames.append(json.loads(line))
    assert frames, "stream produced no frames"
    iterations = [f["iteration"] for f in frames]
    assert iterations == sorted(iterations)
    assert all(f["running"] for f in frames[:-1])
    assert frames[-1]["running"] is False


def test_stream_without_layout_emits_terminal(client):
    sid = make_session(client)
    with client.stream("GET", f"/sessions/{sid}/layout/stream") as response:
        frames = [json.loads(line) for line in response.iter_lines() if line]
    assert len(frames) == 1
    assert frames[0]["running"] is False


def test_pin_endpoint_freezes_node(client):
    sid = make_session(client)
    client.get(f"/sessions/{sid}/graph")
    response = client.post(
        f"/sessions/{sid}/pin", json={"key": "entity:e1", "position": [0.0, 0.0], "pinned": True}
    )
    assert response.status_code == 200
    client.post(f"/sessions/{sid}/layout", json={"action": "step", "steps": 50})
    positions = client.get(f"/sessions/{sid}/graph").json()["positions"]
    assert positions["entity:e1"] == [0.0, 0.0]


# --- search / export ---------------------------------------------------------------


def test_search_over_wire(client):
    sid = make_session(client)
    hits = client.get(f"/sessions/{sid}/search", params={"q": "tesla", "limit": 5}).json()["hits"]
    assert [h["key"] for h in hits] == ["entity:e1", "mention:m1", "mention:m3"]
    assert hits[0]["matchKind"] == "exact"
    titles = client.get(f"/sessions/{sid}/search", params={"q": "doc", "limit": 5}).json()["hits"]
    assert [h["key"] for h in titles] == ["document:d1", "document:d2"]
    fuzzy = client.get(f"/sessions/{sid}/search", params={"q": "berlim", "limit": 5}).json()["hits"]
    assert [h["key"] for h in fuzzy] == ["entity:e2", "mention:m2"]


def test_remaining_op_kinds_over_wire(client):
    sid = make_session(client)
    ops = [
        {"op": "addNode", "node": {"kind": "entity", "id": "e9", "term": "Graz", "class": "LOC"}},
        {
            "op": "addNode",
            "node": {"kind": "mention", "id": "m9", "document": "d2", "start": 12, "end": 16, "surface": "Graz", "class": "LOC"},
        },
        {"op": "addEdge", "edge": {"kind": "mention-entity", "a": "mention:m9", "b": "entity:e9", "confidence": 0.4}},
        {"op": "setNodeClass", "key": "mention:m9", "class": "MISC"},
    ]
    response = client.post(f"/sessions/{sid}/ops", json={"expectedRevision": 0, "ops": ops})
    assert response.status_code == 200
    body = client.get(f"/sessions/{sid}/graph", params={"mode": "dme"}).json()
    keys = {n["key"] for n in body["nodes"]}
    assert {"entity:e9", "mention:m9"} <= keys
    assert any(e["a"] == "mention:m9" and e["b"] == "entity:e9" for e in body["edges"])

    removal = client.post(
        f"/sessions/{sid}/ops",
        json={
            "expectedRevision": 1,
            "ops": [{"op": "deleteEdge", "kind": "mention-entity", "a": "mention:m9", "b": "entity:e9"}],
        },
    )
    assert removal.status_code == 200
    body = client.get(f"/sessions/{sid}/graph").json()
    assert not any(e["a"] == "mention:m9" and e["b"] == "entity:e9" for e in body["edges"])


def test_export_round_trip_and_byte_identity(client):
    sid = make_session(client)
    client.get(f"/sessions/{sid}/graph")  # materialize positions
    first = client.get(f"/sessions/{sid}/export").content
    second = client.get(f"/sessions/{sid}/export").content
    assert first == second

    replica = client.post("/sessions", content=first, headers={"content-type": "application/json"})
    assert replica.status_code == 201
    replica_id = replica.json()["id"]
    assert client.get(f"/sessions/{replica_id}/export").content == first


def test_export_reflects_mutations(client):
    sid = make_session(client)
    client.post(
        f"/sessions/{sid}/ops",
        json={"expectedRevision": 0, "ops": [{"op": "deleteNode", "key": "mention:m2"}]},
    )
    exported = json.loads(client.get(f"/sessions/{sid}/export").content)
    assert all(m["id"] != "m2" for m in exported["mentions"])
