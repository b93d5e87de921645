"""On-disk candidate store with an append-only status journal.

Layout (one directory per store):

    store.json                  store header (object class, config hash, seed)
    object.obj                  the grasped object mesh
    journal.jsonl               append-only status-change log
    candidates/<id>/pose.json
    candidates/<id>/scores.json
    candidates/<id>/status.json

Status files are rewritten atomically; every change is journaled first, so
replaying the journal over the initial statuses reconstructs the current
state exactly. A lock file enforces one writer at a time.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from . import fileio
from .geometry import TriMesh, load_mesh, save_mesh
from .hand import HandPose

STORE_FORMAT = "candidate-store/1"
SCORES_FORMAT = "candidate-scores/1"
STATUS_FORMAT = "candidate-status/1"

VALID_STATUSES = ("raw", "refined", "accepted", "rejected", "template")


class StoreError(RuntimeError):
    pass


class StoreLockedError(StoreError):
    pass


class UnknownCandidateError(KeyError):
    pass


class CandidateStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self._header = fileio.read_doc(self.root / "store.json", STORE_FORMAT)
        self._lock_fd = None

    # -- creation ----------------------------------------------------------

    @staticmethod
    def create(root, object_class: str, object_mesh: TriMesh,
               config_hash: str = "", seed: int = 0) -> "CandidateStore":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        (root / "candidates").mkdir(exist_ok=True)
        save_mesh(object_mesh, root / "object.obj")
        fileio.write_doc(root / "store.json", STORE_FORMAT, {
            "objectClass": object_class,
            "configHash": config_hash,
            "seed": seed,
        })
        (root / "journal.jsonl").touch()
        return CandidateStore(root)

    @property
    def object_class(self) -> str:
        return self._header["objectClass"]

    def object_mesh(self) -> TriMesh:
        return load_mesh(self.root / "object.obj")

    # -- locking -----------------------------------------------------------

    def acquire_writer(self):
        lock = self.root / ".lock"
        try:
            self._lock_fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StoreLockedError(f"store {self.root} already has a writer (lock file present)")
        os.write(self._lock_fd, str(os.getpid()).encode())
        return self

    def release_writer(self):
        if self._lock_fd is not None:
            os.close(self._lock_fd)
            self._lock_fd = None
            (self.root / ".lock").unlink(missing_ok=True)

    def __enter__(self):
        return self.acquire_writer()

    def __exit__(self, *exc):
        self.release_writer()

    # -- candidates --------------------------------------------------------

    def _cand_dir(self, cand_id: str, must_exist: bool = True) -> Path:
        d = self.root / "candidates" / cand_id
        if must_exist and not d.is_dir():
            raise UnknownCandidateError(cand_id)
        return d

    def add_candidate(self, cand_id: str, pose: HandPose, scores: dict,
                      status: str = "refined") -> None:
        if status not in VALID_STATUSES:
            raise ValueError(f"invalid status {status!r}")
        d = self._cand_dir(cand_id, must_exist=False)
        d.mkdir(parents=True, exist_ok=True)
        fileio.save_pose(pose, d / "pose.json")
        fileio.write_doc(d / "scores.json", SCORES_FORMAT, dict(scores))
        fileio.write_doc_atomic(d / "status.json", STATUS_FORMAT,
                                {"status": status, "initialStatus": status})

    def candidate_ids(self) -> list[str]:
        base = self.root / "candidates"
        return sorted(p.name for p in base.iterdir() if p.is_dir())

    def get_pose(self, cand_id: str) -> HandPose:
        return fileio.load_pose(self._cand_dir(cand_id) / "pose.json")

    def get_scores(self, cand_id: str) -> dict:
        doc = fileio.read_doc(self._cand_dir(cand_id) / "scores.json", SCORES_FORMAT)
        return {k: v for k, v in doc.items() if k != "format"}

    def get_status(self, cand_id: str) -> str:
        doc = fileio.read_doc(self._cand_dir(cand_id) / "status.json", STATUS_FORMAT)
        return doc["status"]

    def list_candidates(self) -> list[dict]:
        out = []
        for cid in self.candidate_ids():
            out.append({"id": cid, "scores": self.get_scores(cid),
                        "status": self.get_status(cid)})
        return out

    def set_status(self, cand_id: str, status: str) -> None:
        """Journal the change, then atomically rewrite the status file."""
        if status not in VALID_STATUSES:
            raise ValueError(f"invalid status {status!r}")
        d = self._cand_dir(cand_id)
        with open(self.root / "journal.jsonl", "a") as fh:
            fh.write(json.dumps({"id": cand_id, "status": status},
                                sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        doc = fileio.read_doc(d / "status.json", STATUS_FORMAT)
        fileio.write_doc_atomic(d / "status.json", STATUS_FORMAT,
                                {"status": status,
                                 "initialStatus": doc["initialStatus"]})

    def templates(self) -> list[str]:
        return [cid for cid in self.candidate_ids() if self.get_status(cid) == "template"]

    # -- journal -----------------------------------------------------------

    def replay_journal(self) -> dict[str, str]:
        """Initial statuses with the journal applied in order."""
        state = {}
        for cid in self.candidate_ids():
            doc = fileio.read_doc(self._cand_dir(cid) / "status.json", STATUS_FORMAT)
            state[cid] = doc["initialStatus"]
        with open(self.root / "journal.jsonl") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                ev = json.loads(line)
                if ev["id"] in state:
                    state[ev["id"]] = ev["status"]
        return state

    def verify_journal(self) -> bool:
        """True iff replaying the journal matches the status files."""
        replayed = self.replay_journal()
        return all(self.get_status(cid) == st for cid, st in replayed.items())
