import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from manipsynth.geometry import SpatialIndex, classify_inside, load_mesh
from manipsynth.hand import HandPose, perturb_pose, pose_vertices
from manipsynth.primitives import make_icosphere
from manipsynth.service import make_server, shutdown_server
from manipsynth.store import CandidateStore, StoreLockedError


@pytest.fixture
def store(tmp_path, toy_model, toy_template_pose, rng):
    s = CandidateStore.create(tmp_path / "store", "diskplacer",
                              make_icosphere(radius=0.04, subdivisions=2),
                              "cafebabe", 11)
    with s:
        for k in range(5):
            pose = perturb_pose(toy_template_pose, 0.02, 0.002, rng)
            s.add_candidate(f"cand_{k:04d}", pose,
                            {"penetrationVolumeCm3": 0.1 * k,
                             "contactVertexCount": k},
                            status="refined")
    return s


@pytest.fixture
def server(store, toy_model):
    httpd = make_server(store, toy_model)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield httpd
    shutdown_server(httpd)
    thread.join(timeout=5)


def url(httpd, path):
    return f"http://127.0.0.1:{httpd.server_address[1]}{path}"


def get(httpd, path):
    try:
        with urllib.request.urlopen(url(httpd, path)) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def post(httpd, path, payload):
    req = urllib.request.Request(url(httpd, path),
                                 data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"},
                                 method="POST")
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def test_list_candidates(server):
    code, doc = get(server, "/candidates")
    assert code == 200
    rows = doc["candidates"]
    assert [r["id"] for r in rows] == [f"cand_{k:04d}" for k in range(5)]
    assert all(r["status"] == "refined" for r in rows)
    assert rows[3]["scores"]["contactVertexCount"] == 3


def test_list_empty_store(tmp_path, toy_model):
    empty = CandidateStore.create(tmp_path / "empty", "other",
                                  make_icosphere(radius=0.02), "0" * 16, 0)
    httpd = make_server(empty, toy_model)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        code, doc = get(httpd, "/candidates")
        assert code == 200 and doc["candidates"] == []
    finally:
        shutdown_server(httpd)
        thread.join(timeout=5)


def test_mesh_endpoint_matches_inside_oracle(server, store, toy_model, tmp_path):
    code, doc = get(server, "/candidates/cand_0002/mesh")
    assert code == 200 and doc["id"] == "cand_0002"
    (tmp_path / "hand.obj").write_text(doc["handObj"])
    (tmp_path / "obj.obj").write_text(doc["objectObj"])
    hand = load_mesh(tmp_path / "hand.obj")
    obj = load_mesh(tmp_path / "obj.obj")
    assert len(obj.faces) == len(make_icosphere(radius=0.04, subdivisions=2).faces)

    posed = pose_vertices(toy_model, store.get_pose("cand_0002"))
    np.testing.assert_allclose(hand.vertices, posed, atol=1e-6)
    inside = classify_inside(SpatialIndex(store.object_mesh()), posed)
    assert doc["objectInsideMask"] == [int(i) for i in np.flatnonzero(inside)]


def test_unknown_candidate_404(server):
    code, _ = get(server, "/candidates/nope/mesh")
    assert code == 404
    code, _ = post(server, "/candidates/nope/status", {"status": "accepted"})
    assert code == 404


def test_unknown_path_404(server):
    code, _ = get(server, "/frobnicate")
    assert code == 404


def test_invalid_status_409(server):
    code, _ = post(server, "/candidates/cand_0000/status", {"status": "maybe"})
    assert code == 409
    code, _ = post(server, "/candidates/cand_0000/status", {"nothing": 1})
    assert code == 409


def test_status_persists_across_restart(server, store, toy_model):
    code, doc = post(server, "/candidates/cand_0001/status", {"status": "template"})
    assert code == 200 and doc["status"] == "template"
    shutdown_server(server)

    httpd = make_server(CandidateStore(store.root), toy_model)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    try:
        _, doc = get(httpd, "/candidates")
        by_id = {r["id"]: r["status"] for r in doc["candidates"]}
        assert by_id["cand_0001"] == "template"
    finally:
        shutdown_server(httpd)
        thread.join(timeout=5)
    # re-acquire so the fixture's own shutdown_server() has a lock to release
    store.acquire_writer()
    server.manipsynth_store = store


def test_rapid_updates_replay_identically(server, store, rng):
    statuses = ["accepted", "rejected", "template"]
    for _ in range(100):
        cid = f"cand_{rng.integers(0, 5):04d}"
        code, _ = post(server, f"/candidates/{cid}/status",
                       {"status": statuses[rng.integers(0, 3)]})
        assert code == 200
    assert store.verify_journal()
    replayed = store.replay_journal()
    _, doc = get(server, "/candidates")
    for row in doc["candidates"]:
        assert replayed[row["id"]] == row["status"]


def test_server_holds_writer_lock(server, store):
    other = CandidateStore(store.root)
    with pytest.raises(StoreLockedError):
        other.acquire_writer()
