import pytest
from fastapi.testclient import TestClient

from vislabel.exports import export_dataset
from vislabel.fixtures import make_fixture
from vislabel.loops import simulated_oracle
from vislabel.service import create_app
from vislabel.session import Session, SessionConfig


@pytest.fixture()
def small():
    return make_fixture(["1", "1_1", "1_2", "2"], [3, 2, 2, 3], feature_dim=6, seed=3)


@pytest.fixture()
def client(tmp_path):
    return TestClient(create_app(tmp_path / "served"))


def config_body(fx, tmp_path, session_id, **overrides):
    manifest = tmp_path / f"{session_id}-manifest.jsonl"
    reference = tmp_path / f"{session_id}-reference.json"
    fx.write(manifest, reference)
    body = {
        "session_id": session_id,
        "feature_dim": fx.feature_dim,
        "oracle_mode": "interactive",
        "manifest": str(manifest),
        "reference": str(reference),
        "seed_hierarchy": True,
    }
    body.update(overrides)
    return body


def drive_over_http(client, session_id, oracle):
    """Answer questions via the API only, using a client-side oracle."""
    while True:
        nxt = client.get(f"/session/{session_id}/next").json()
        if nxt["done"]:
            return
        q = nxt["question"]
        if q["kind"] == "new_category":
            payload = oracle.new_category_for(
                q["object_id"],
                q["category_name"],
                q["genus"],
                q["differentia"],
                nxt["candidate"]["is_root"],
            )
            body = {
                "object_id": q["object_id"],
                "seq": q["seq"],
                "new_category": (
                    {
                        "name": payload.name,
                        "genus": payload.genus,
                        "differentia": payload.differentia,
                    }
                    if payload is not None
                    else None
                ),
            }
        else:
            body = {
                "object_id": q["object_id"],
                "seq": q["seq"],
                "verdict": oracle.verdict_for(
                    q["object_id"], q["kind"], q["category_name"], q["genus"], q["differentia"]
                ),
            }
        response = client.post(f"/session/{session_id}/answer", json=body)
        assert response.status_code == 200, response.text


def test_create_session_and_first_question(client, small, tmp_path):
    r = client.post("/sessions", json=config_body(small, tmp_path, "s1"))
    assert r.status_code == 201
    state = r.json()["state"]
    assert state["stats"]["objects"]["total"] == 10
    nxt = client.get("/session/s1/next").json()
    assert nxt["done"] is False
    assert nxt["question"]["kind"] == "genus"
    assert nxt["question"]["prompt"].startswith("Does the object share")
    assert nxt["object"]["crop"]["side"] > 0
    assert nxt["candidate"]["exemplars"] == []  # seeded tree starts memberless


def test_unknown_session_is_404(client):
    assert client.get("/session/ghost/state").status_code == 404
    assert client.get("/session/ghost/next").status_code == 404


def test_malformed_answer_is_422(client, small, tmp_path):
    client.post("/sessions", json=config_body(small, tmp_path, "s2"))
    r = client.post("/session/s2/answer", json={"object_id": 12})
    assert r.status_code == 422


def test_stale_seq_is_409_with_pending_echo(client, small, tmp_path):
    client.post("/sessions", json=config_body(small, tmp_path, "s3"))
    pending = client.get("/session/s3/next").json()["question"]
    r = client.post(
        "/session/s3/answer",
        json={"object_id": pending["object_id"], "seq": pending["seq"] + 3, "verdict": True},
    )
    assert r.status_code == 409
    assert r.json()["pending"]["seq"] == pending["seq"]


def test_answer_resubmission_is_idempotent(client, small, tmp_path):
    client.post("/sessions", json=config_body(small, tmp_path, "s4"))
    pending = client.get("/session/s4/next").json()["question"]
    body = {"object_id": pending["object_id"], "seq": pending["seq"], "verdict": True}
    first = client.post("/session/s4/answer", json=body)
    second = client.post("/session/s4/answer", json=body)
    assert first.status_code == second.status_code == 200
    assert first.json()["ack"] == second.json()["ack"]
    after = client.get("/session/s4/next").json()["question"]
    assert (after["object_id"], after["seq"]) != (pending["object_id"], pending["seq"])


def test_empty_genus_in_new_category_is_422(client, tmp_path):
    fx = make_fixture(["1"], [2], feature_dim=4, seed=1)
    client.post(
        "/sessions", json=config_body(fx, tmp_path, "s5", seed_hierarchy=False)
    )
    pending = client.get("/session/s5/next").json()["question"]
    assert pending["kind"] == "new_category"
    r = client.post(
        "/session/s5/answer",
        json={
            "object_id": pending["object_id"],
            "seq": pending["seq"],
            "new_category": {"genus": "   ", "differentia": ""},
        },
    )
    assert r.status_code == 422


def test_http_session_matches_in_process_run(client, small, tmp_path):
    body = config_body(small, tmp_path, "twin")
    r = client.post("/sessions", json=body)
    assert r.status_code == 201
    oracle = simulated_oracle(small.reference, small.ground_truth, flip_p=0.0, seed=0)
    drive_over_http(client, "twin", oracle)
    http_export = client.get("/session/twin/export").json()

    config = SessionConfig(
        session_id="twin",
        feature_dim=small.feature_dim,
        oracle_mode="simulated",
        manifest=body["manifest"],
        reference=body["reference"],
        seed_hierarchy=True,
    )
    local = Session.create(config, tmp_path / "local" / "twin")
    local.run_with_oracle(local.build_simulated_oracle())
    bundle = export_dataset(local)
    assert http_export["dataset_jsonl"] == bundle.dataset_jsonl()
    assert http_export["hierarchy_json"] == bundle.hierarchy_json
    assert http_export["transcripts_jsonl"] == bundle.transcripts_jsonl()

    done = client.get("/session/twin/next").json()
    assert done == {"done": True, "question": None}
    stats = client.get("/session/twin/stats").json()
    assert stats["objects"]["assigned"] == 10


def test_exemplars_cap_at_six_newest_first(client, tmp_path):
    fx = make_fixture(["1"], [9], feature_dim=4, seed=2)
    client.post("/sessions", json=config_body(fx, tmp_path, "s6"))
    oracle = simulated_oracle(fx.reference, fx.ground_truth, flip_p=0.0, seed=0)
    # answer 8 objects, leaving one pending question against the filled category
    for _ in range(8):
        nxt = client.get("/session/s6/next").json()
        q = nxt["question"]
        client.post(
            "/session/s6/answer",
            json={"object_id": q["object_id"], "seq": q["seq"], "verdict": True},
        )
    nxt = client.get("/session/s6/next").json()
    exemplars = nxt["candidate"]["exemplars"]
    assert len(exemplars) == 6
    ids = [e["object_id"] for e in exemplars]
    assert ids == sorted(ids, reverse=True)  # newest assignments first


def test_state_endpoint_shows_hierarchy(client, small, tmp_path):
    client.post("/sessions", json=config_body(small, tmp_path, "s7"))
    state = client.get("/session/s7/state").json()
    assert state["session_id"] == "s7"
    assert len(state["hierarchy"]["nodes"]) == 5  # root + 4 seeded categories
