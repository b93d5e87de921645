"""Structured-text persistence.

Every config, pose, annotation and report file is a JSON document with a
versioned "format" header, serialized with sorted keys so identical data
is byte-identical on disk. Meshes are the one exception (ASCII OBJ, see
geometry.save_mesh).
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .hand import HandPose


class FormatError(ValueError):
    """Wrong or missing format header in a structured-text file."""


def dumps_doc(kind: str, payload: dict) -> str:
    doc = {"format": kind, **payload}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_doc(path, kind: str, payload: dict) -> None:
    Path(path).write_text(dumps_doc(kind, payload))


def write_doc_atomic(path, kind: str, payload: dict) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(dumps_doc(kind, payload))
    os.replace(tmp, path)


def read_doc(path, kind: str) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != kind:
        raise FormatError(f"{path}: expected format {kind!r}, found {doc.get('format')!r}")
    return doc


def loads_doc(text: str, kind: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != kind:
        raise FormatError(f"expected format {kind!r}, found {doc.get('format')!r}")
    return doc


def config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


# -- hand poses --------------------------------------------------------------

POSE_FORMAT = "hand-pose/1"


def pose_payload(pose: HandPose) -> dict:
    return {
        "globalRotation": pose.global_rotation.tolist(),
        "globalTranslation": pose.global_translation.tolist(),
        "jointRotations": pose.joint_rotations.tolist(),
    }


def pose_from_payload(doc: dict) -> HandPose:
    return HandPose(np.array(doc["globalRotation"], dtype=float),
                    np.array(doc["globalTranslation"], dtype=float),
                    np.array(doc["jointRotations"], dtype=float))


def save_pose(pose: HandPose, path) -> None:
    write_doc(path, POSE_FORMAT, pose_payload(pose))


def load_pose(path) -> HandPose:
    return pose_from_payload(read_doc(path, POSE_FORMAT))


# -- rigid transforms --------------------------------------------------------


def transform_payload(tf) -> dict:
    return {"rotation": tf.rotation.tolist(), "translation": tf.translation.tolist()}


def transform_from_payload(doc: dict):
    from .geometry import RigidTransform
    return RigidTransform(np.array(doc["rotation"], dtype=float),
                          np.array(doc["translation"], dtype=float))
