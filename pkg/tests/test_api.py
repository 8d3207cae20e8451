"""HTTP API tests over the FastAPI test client."""

import json

import pytest
from fastapi.testclient import TestClient

from statescope.api import create_app
from statescope.store import SessionStore
from statescope.traces import (
    serialize_network_trace,
    serialize_power_trace,
    session_to_doc,
    NetworkTrace,
    PowerTrace,
)
from conftest import make_vision_session

FAST = {"n_iter": 300, "perplexity": 8.0}


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(SessionStore(tmp_path / "data")))


@pytest.fixture
def seeded(client):
    """Client with a synthetic vision session created and pipelined."""
    doc = session_to_doc(make_vision_session(seed=0, session_id="v0"))
    assert client.post("/sessions", json={"session": doc}).status_code == 201
    assert client.post("/sessions/v0/pipeline", json=FAST).status_code == 200
    return client


def test_create_returns_201_with_id(client):
    res = client.post("/sessions", json={"session_id": "fresh"})
    assert res.status_code == 201
    assert res.json()["session_id"] == "fresh"


def test_create_generates_id_when_missing(client):
    res = client.post("/sessions", json={})
    assert res.status_code == 201
    assert res.json()["session_id"]


def test_create_duplicate_conflict(client):
    client.post("/sessions", json={"session_id": "dup"})
    res = client.post("/sessions", json={"session_id": "dup"})
    assert res.status_code == 409
    assert res.json()["code"] == "SessionExists"


def test_unknown_session_404(client):
    res = client.get("/sessions/ghost")
    assert res.status_code == 404
    assert res.json()["code"] == "SessionNotFound"


def test_ingest_traces_and_events(client):
    client.post("/sessions", json={"session_id": "ing"})
    client.post("/sessions/ing/events", json={"kind": "press", "t_ms": 300})
    power = serialize_power_trace(PowerTrace(tuple((t, 100.0) for t in range(0, 1000, 10))))
    network = serialize_network_trace(NetworkTrace(tuple((t, 5) for t in range(0, 1000, 100))))
    res = client.post(
        "/sessions/ing/ingest",
        data={"window_ms": "500"},
        files={
            "power": ("power.csv", power.encode(), "text/csv"),
            "network": ("network.csv", network.encode(), "text/csv"),
        },
    )
    assert res.status_code == 200
    assert res.json() == {"windows": 3, "events": 1}
    doc = client.get("/sessions/ing").json()
    assert [w["t_start_ms"] for w in doc["windows"]] == [0, 300, 800]
    assert doc["events"][0]["kind"] == "press"


def test_annotation_flow(client):
    client.post("/sessions", json={"session_id": "ann"})
    power = serialize_power_trace(PowerTrace(tuple((t, 100.0) for t in range(0, 1000, 10))))
    client.post("/sessions/ann/ingest", data={"window_ms": "500"},
                files={"power": ("power.csv", power.encode(), "text/csv")})
    res = client.post("/sessions/ann/annotations", json={"name": "idle", "window_ids": [0, 1]})
    assert res.status_code == 200
    doc = client.get("/sessions/ann").json()
    assert [w["annotation"] for w in doc["windows"]] == ["idle", "idle"]
    assert {l["name"] for l in doc["labels"]} == {"idle"}


def test_pipeline_and_artifact_views(seeded):
    res = seeded.get("/sessions/v0/embedding")
    assert res.status_code == 200
    points = res.json()["points"]
    assert len(points) == 36
    assert {"window_id", "x", "y", "cluster", "annotation"} <= set(points[0])

    corr = seeded.get("/sessions/v0/correlation").json()
    assert set(corr["rows"]) == {"off", "idle", "detecting"}
    for row in corr["cells"]:
        assert sum(row) == pytest.approx(1.0, abs=1e-12)

    machine = seeded.get("/sessions/v0/fsm").json()
    assert {s["name"] for s in machine["states"]} == {"off", "idle", "detecting"}
    assert machine["initial"] == "off"


def test_collage_missing_label_422(seeded):
    res = seeded.post("/sessions/v0/collage", json={"groups": {"only": ["off"]}})
    assert res.status_code == 422
    body = res.json()
    assert body["code"] == "IncompleteCollage"
    assert "idle" in body["detail"]


def test_collage_round_trip_updates_fsm_and_correlation(seeded):
    before_corr = seeded.get("/sessions/v0/correlation").json()
    before_fsm = seeded.get("/sessions/v0/fsm").json()
    res = seeded.post(
        "/sessions/v0/collage",
        json={"groups": {"active": ["idle", "detecting"], "off": ["off"]}},
    )
    assert res.status_code == 200
    out = res.json()
    assert len(out["fsm"]["states"]) == len(before_fsm["states"]) - 1
    assert len(out["correlation"]["rows"]) == len(before_corr["rows"]) - 1

    # views reflect the collage immediately
    assert {s["name"] for s in seeded.get("/sessions/v0/fsm").json()["states"]} == {"off", "active"}
    assert set(seeded.get("/sessions/v0/correlation").json()["rows"]) == {"active", "off"}
    doc = seeded.get("/sessions/v0").json()
    assert {w["annotation"] for w in doc["windows"]} == {"off", "active"}


def test_classifier_and_verify_stream(seeded):
    res = seeded.post("/sessions/v0/classifier", json={"split_seed": 3})
    assert res.status_code == 200
    assert res.json()["holdout"]["accuracy"] >= 0.9

    replay = session_to_doc(make_vision_session(seed=9, session_id="replay-1"))
    seeded.post("/sessions", json={"session": replay})
    with seeded.stream("GET", "/sessions/v0/verify/stream", params={"replay": "replay-1"}) as res:
        assert res.status_code == 200
        assert res.headers["content-type"].startswith("application/x-ndjson")
        lines = [json.loads(ln) for ln in res.iter_lines() if ln]
    assert len(lines) == 36  # one step per replay window
    assert {"window_id", "predicted", "distance", "transition_valid", "event_kind"} == set(lines[0])
    correct = sum(1 for step, w in zip(lines, replay["windows"]) if step["predicted"] == w["annotation"])
    assert correct >= 34


def test_verify_stream_needs_classifier(seeded):
    res = seeded.get("/sessions/v0/verify/stream")
    assert res.status_code == 404
    assert res.json()["code"] == "MissingArtifact"


def test_synth_endpoint(client):
    res = client.post("/synth", json={"device": "vision", "windows_per_state": 8,
                                      "window_ms": 200, "seed": 1, "session_id": "s1"})
    assert res.status_code == 201
    doc = client.get("/sessions/s1").json()
    assert len(doc["windows"]) == 24
    res = client.post("/synth", json={"device": "toaster"})
    assert res.status_code == 422


def test_correlation_and_fsm_self_refresh_after_annotation_change(seeded):
    # correlation and fsm are cheap projections of (clusters, annotations):
    # they track annotation edits without a pipeline rerun
    seeded.post("/sessions/v0/annotations", json={"name": "renamed", "window_ids": [0]})
    corr = seeded.get("/sessions/v0/correlation")
    assert corr.status_code == 200
    assert "renamed" in corr.json()["rows"]
    machine = seeded.get("/sessions/v0/fsm")
    assert machine.status_code == 200
    assert "renamed" in {s["name"] for s in machine.json()["states"]}


def test_annotation_origin_can_be_specified(seeded):
    seeded.post(
        "/sessions/v0/annotations",
        json={"name": "truth", "window_ids": [1], "origin": "ground_truth"},
    )
    doc = seeded.get("/sessions/v0").json()
    owner = next(l for l in doc["labels"] if l["name"] == "truth")
    assert owner["origin"] == "ground_truth"


def test_embedding_stale_after_window_data_changes(seeded):
    # expensive pipeline artifacts still guard staleness: replacing the
    # windows invalidates the embedding until the pipeline reruns
    power = serialize_power_trace(PowerTrace(tuple((t, 50.0) for t in range(0, 2000, 10))))
    seeded.post("/sessions/v0/ingest", data={"window_ms": "500"},
                files={"power": ("power.csv", power.encode(), "text/csv")})
    res = seeded.get("/sessions/v0/embedding")
    assert res.status_code == 409
    assert res.json()["code"] == "StaleArtifact"


def test_responses_validate_against_published_schemas(seeded):
    import jsonschema

    from statescope.schemas import SCHEMAS

    assert seeded.get("/schemas").json() == SCHEMAS
    jsonschema.validate(seeded.get("/sessions/v0").json(), SCHEMAS["session"])
    jsonschema.validate(seeded.get("/sessions/v0/fsm").json(), SCHEMAS["fsm"])
    jsonschema.validate(seeded.get("/sessions/v0/embedding").json(), SCHEMAS["embedding_view"])
    jsonschema.validate(seeded.get("/sessions/v0/correlation").json(), SCHEMAS["correlation"])

    holdout = seeded.post("/sessions/v0/classifier", json={"split_seed": 0}).json()["holdout"]
    jsonschema.validate(holdout, SCHEMAS["eval_report"])

    manifest = seeded.post("/sessions/v0/pipeline", json=FAST).json()["artifacts"]
    jsonschema.validate(manifest, SCHEMAS["artifact_manifest"])

    with seeded.stream("GET", "/sessions/v0/verify/stream") as res:
        first = json.loads(next(iter(res.iter_lines())))
    jsonschema.validate(first, SCHEMAS["verification_step"])

    err = seeded.get("/sessions/ghost")
    jsonschema.validate(err.json(), SCHEMAS["error"])
