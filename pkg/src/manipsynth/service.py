"""Local curation service over a candidate store.

Loopback HTTP, JSON bodies, three endpoints:

    GET  /candidates                  -> {"candidates": [{id, scores, status}]}
    GET  /candidates/{id}/mesh        -> posed hand OBJ, object OBJ, inside mask
    POST /candidates/{id}/status      -> {"status": accepted|rejected|template}

Status codes: 200 on success, 404 for unknown candidates or paths, 409 for
invalid or conflicting mutations. The service holds the store's writer lock
for its whole lifetime; every status change goes through the journal.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .geometry import SpatialIndex, TriMesh, classify_inside, mesh_to_obj_string
from .hand import HandModel, pose_vertices
from .store import CandidateStore, StoreError, UnknownCandidateError

MUTABLE_STATUSES = ("accepted", "rejected", "template")


class CurationService:
    """Owns the store lock and answers candidate queries/mutations."""

    def __init__(self, store: CandidateStore, hand_model: HandModel):
        self.store = store
        self.model = hand_model
        self._mutex = threading.Lock()
        self._object_mesh = store.object_mesh().with_normals()
        self._object_index = SpatialIndex(self._object_mesh)

    def list_candidates(self) -> dict:
        with self._mutex:
            return {"candidates": self.store.list_candidates()}

    def candidate_mesh(self, cand_id: str) -> dict:
        with self._mutex:
            pose = self.store.get_pose(cand_id)
        hand = TriMesh(pose_vertices(self.model, pose), self.model.faces)
        inside = classify_inside(self._object_index, hand.vertices)
        return {
            "id": cand_id,
            "handObj": mesh_to_obj_string(hand),
            "objectObj": mesh_to_obj_string(self._object_mesh),
            "objectInsideMask": [int(i) for i in np.flatnonzero(inside)],
        }

    def set_status(self, cand_id: str, status: str) -> dict:
        if status not in MUTABLE_STATUSES:
            raise ValueError(f"status must be one of {MUTABLE_STATUSES}, got {status!r}")
        with self._mutex:
            self.store.set_status(cand_id, status)
            return {"id": cand_id, "status": self.store.get_status(cand_id)}


class _Handler(BaseHTTPRequestHandler):
    service: CurationService = None
    static_root: Path | None = None
    quiet = True

    def log_message(self, fmt, *args):
        if not self.quiet:
            super().log_message(fmt, *args)

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True, indent=2).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _candidate_id(self, suffix: str) -> str | None:
        parts = self.path.rstrip("/").split("/")
        # /candidates/<id>/<suffix>
        if len(parts) == 4 and parts[1] == "candidates" and parts[3] == suffix:
            return parts[2]
        return None

    def do_GET(self):
        if self.path.rstrip("/") == "/candidates" or self.path == "/candidates":
            self._send_json(200, self.service.list_candidates())
            return
        cid = self._candidate_id("mesh")
        if cid is not None:
            try:
                self._send_json(200, self.service.candidate_mesh(cid))
            except (UnknownCandidateError, FileNotFoundError):
                self._send_json(404, {"error": f"unknown candidate {cid!r}"})
            return
        if self.static_root is not None:
            self._serve_static()
            return
        self._send_json(404, {"error": f"no such path {self.path!r}"})

    def do_POST(self):
        cid = self._candidate_id("status")
        if cid is None:
            self._send_json(404, {"error": f"no such path {self.path!r}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length) or b"{}")
            status = doc.get("status")
            if not isinstance(status, str):
                raise ValueError("request body must carry a string 'status' field")
            result = self.service.set_status(cid, status)
        except UnknownCandidateError:
            self._send_json(404, {"error": f"unknown candidate {cid!r}"})
        except (ValueError, StoreError, json.JSONDecodeError) as exc:
            self._send_json(409, {"error": str(exc)})
        else:
            self._send_json(200, result)

    def _serve_static(self):
        rel = self.path.lstrip("/") or "index.html"
        target = (self.static_root / rel).resolve()
        if not str(target).startswith(str(self.static_root.resolve())) \
                or not target.is_file():
            self._send_json(404, {"error": f"no such path {self.path!r}"})
            return
        data = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(store: CandidateStore, hand_model: HandModel,
                port: int = 0, host: str = "127.0.0.1",
                static_root=None) -> ThreadingHTTPServer:
    """Build a ready-to-run server holding the store's writer lock.

    The caller runs serve_forever() (or handle_request()) and must call
    shutdown_server() to release the lock. Port 0 picks a free port.
    """
    service = CurationService(store, hand_model)
    handler = type("BoundHandler", (_Handler,), {
        "service": service,
        "static_root": Path(static_root) if static_root else None,
    })
    store.acquire_writer()
    try:
        httpd = ThreadingHTTPServer((host, port), handler)
    except BaseException:
        store.release_writer()
        raise
    httpd.manipsynth_store = store
    return httpd


def shutdown_server(httpd: ThreadingHTTPServer) -> None:
    httpd.shutdown()
    httpd.server_close()
    httpd.manipsynth_store.release_writer()
