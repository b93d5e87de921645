"""Skinned articulated hand: forward kinematics, linear blend skinning,
keypoint extraction, pose perturbation, and the analytic pose Jacobian
used by the grasp refiner and the body fusion solver.

The hand is file-driven: rest mesh, joint tree, dense skinning weights and
the 21-keypoint rule all come from a JSON model file (see load_hand_model).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import TriMesh
from . import so3

NUM_KEYPOINTS = 21


class HandModelError(ValueError):
    """Invalid hand model file or data."""


@dataclass
class HandModel:
    rest_vertices: np.ndarray        # (N, 3) meters
    faces: np.ndarray                # (F, 3)
    joint_parents: np.ndarray        # (J,) parent index, root = -1
    rest_joints: np.ndarray          # (J, 3)
    skin_weights: np.ndarray         # (N, J), rows sum to 1
    fingertip_vertex_ids: np.ndarray
    pad_keypoint_vertex_ids: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    contact_vertex_ids: np.ndarray | None = None  # default mask for the contact loss

    def __post_init__(self):
        self.rest_vertices = np.asarray(self.rest_vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        self.joint_parents = np.asarray(self.joint_parents, dtype=np.int64).reshape(-1)
        self.rest_joints = np.asarray(self.rest_joints, dtype=float).reshape(-1, 3)
        self.skin_weights = np.asarray(self.skin_weights, dtype=float)
        self.fingertip_vertex_ids = np.asarray(self.fingertip_vertex_ids, dtype=np.int64)
        self.pad_keypoint_vertex_ids = np.asarray(self.pad_keypoint_vertex_ids, dtype=np.int64)
        if self.contact_vertex_ids is not None:
            self.contact_vertex_ids = np.asarray(self.contact_vertex_ids, dtype=np.int64)

        n, j = len(self.rest_vertices), len(self.joint_parents)
        if self.skin_weights.shape != (n, j):
            raise HandModelError(f"skin weights must be ({n}, {j}), got {self.skin_weights.shape}")
        if np.any(self.skin_weights < -1e-12):
            raise HandModelError("negative skinning weight")
        row_sums = self.skin_weights.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-4):
            bad = int(np.argmax(np.abs(row_sums - 1.0)))
            raise HandModelError(f"skin weight row {bad} sums to {row_sums[bad]:.6f}, expected 1")
        self.skin_weights = self.skin_weights / row_sums[:, None]

        roots = np.flatnonzero(self.joint_parents < 0)
        if len(roots) != 1:
            raise HandModelError(f"joint tree must have exactly one root, found {len(roots)}")
        self.root = int(roots[0])
        self._check_acyclic()
        self.topo_order = self._topological_order()

        if self.keypoint_count != NUM_KEYPOINTS:
            raise HandModelError(
                f"keypoint rule yields {self.keypoint_count} points, expected {NUM_KEYPOINTS} "
                "(joints + fingertips + padding)")

    def _check_acyclic(self):
        for j in range(len(self.joint_parents)):
            seen = set()
            k = j
            while k >= 0:
                if k in seen:
                    raise HandModelError(f"cycle in joint tree at joint {j}")
                seen.add(k)
                k = int(self.joint_parents[k])

    def _topological_order(self):
        order = []
        pending = list(np.flatnonzero(self.joint_parents < 0))
        children = {j: [] for j in range(len(self.joint_parents))}
        for j, p in enumerate(self.joint_parents):
            if p >= 0:
                children[int(p)].append(j)
        while pending:
            j = pending.pop(0)
            order.append(j)
            pending.extend(children[j])
        return np.asarray(order, dtype=np.int64)

    @property
    def num_joints(self) -> int:
        return len(self.joint_parents)

    @property
    def keypoint_count(self) -> int:
        return (self.num_joints + len(self.fingertip_vertex_ids)
                + len(self.pad_keypoint_vertex_ids))

    def default_contact_mask(self) -> np.ndarray:
        if self.contact_vertex_ids is not None and len(self.contact_vertex_ids):
            return self.contact_vertex_ids
        return self.fingertip_vertex_ids


@dataclass
class HandPose:
    """Articulation parameters: axis-angle joint rotations (root excluded),
    plus a global rigid motion applied last."""

    global_rotation: np.ndarray       # (3,) axis-angle, radians
    global_translation: np.ndarray    # (3,) meters
    joint_rotations: np.ndarray       # (J-1, 3) axis-angle, indexed by non-root joints

    def __post_init__(self):
        self.global_rotation = np.asarray(self.global_rotation, dtype=float).reshape(3)
        self.global_translation = np.asarray(self.global_translation, dtype=float).reshape(3)
        self.joint_rotations = np.asarray(self.joint_rotations, dtype=float).reshape(-1, 3)
        mags = np.linalg.norm(self.joint_rotations, axis=1)
        if np.linalg.norm(self.global_rotation) >= np.pi or np.any(mags >= np.pi):
            raise ValueError("rotation-vector magnitude must be < pi; canonicalize first")

    @staticmethod
    def identity(num_joints: int) -> "HandPose":
        return HandPose(np.zeros(3), np.zeros(3), np.zeros((num_joints - 1, 3)))

    def copy(self) -> "HandPose":
        return HandPose(self.global_rotation.copy(), self.global_translation.copy(),
                        self.joint_rotations.copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.global_rotation, self.global_translation,
                               self.joint_rotations.ravel()])

    @staticmethod
    def from_vector(v: np.ndarray, canonicalize: bool = True) -> "HandPose":
        v = np.asarray(v, dtype=float).ravel()
        gr, gt = v[:3], v[3:6]
        jr = v[6:].reshape(-1, 3)
        if canonicalize:
            gr = so3.canonicalize_rotvec(gr)
            jr = np.stack([so3.canonicalize_rotvec(r) for r in jr]) if len(jr) else jr
        return HandPose(gr, gt, jr)


# ---------------------------------------------------------------------------
# model file IO
# ---------------------------------------------------------------------------

HAND_MODEL_FORMAT = "hand-model/1"


def load_hand_model(path) -> HandModel:
    """Load a hand model from its JSON document.

    Required keys: restVertices, faces, jointTree, restJoints, skinWeights,
    fingertipVertexIds. Optional: padKeypointVertexIds, contactVertexIds.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != HAND_MODEL_FORMAT:
        raise HandModelError(f"{path}: unsupported format {doc.get('format')!r}")
    try:
        return HandModel(
            rest_vertices=np.array(doc["restVertices"], dtype=float),
            faces=np.array(doc["faces"], dtype=np.int64),
            joint_parents=np.array(doc["jointTree"], dtype=np.int64),
            rest_joints=np.array(doc["restJoints"], dtype=float),
            skin_weights=np.array(doc["skinWeights"], dtype=float),
            fingertip_vertex_ids=np.array(doc["fingertipVertexIds"], dtype=np.int64),
            pad_keypoint_vertex_ids=np.array(doc.get("padKeypointVertexIds", []), dtype=np.int64),
            contact_vertex_ids=(np.array(doc["contactVertexIds"], dtype=np.int64)
                                if "contactVertexIds" in doc else None),
        )
    except KeyError as exc:
        raise HandModelError(f"{path}: missing field {exc}") from exc


def save_hand_model(model: HandModel, path) -> None:
    doc = {
        "format": HAND_MODEL_FORMAT,
        "restVertices": model.rest_vertices.tolist(),
        "faces": model.faces.tolist(),
        "jointTree": model.joint_parents.tolist(),
        "restJoints": model.rest_joints.tolist(),
        "skinWeights": model.skin_weights.tolist(),
        "fingertipVertexIds": model.fingertip_vertex_ids.tolist(),
        "padKeypointVertexIds": model.pad_keypoint_vertex_ids.tolist(),
    }
    if model.contact_vertex_ids is not None:
        doc["contactVertexIds"] = model.contact_vertex_ids.tolist()
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


# ---------------------------------------------------------------------------
# kinematics and skinning
# ---------------------------------------------------------------------------


def _joint_rotation_index(model: HandModel) -> np.ndarray:
    """Map joint id -> row in HandPose.joint_rotations (-1 for the root)."""
    idx = np.full(model.num_joints, -1, dtype=np.int64)
    r = 0
    for j in range(model.num_joints):
        if j != model.root:
            idx[j] = r
            r += 1
    return idx


def _forward_kinematics(model: HandModel, pose: HandPose):
    """World transform W_j per joint (before the global rigid motion)."""
    J = model.num_joints
    rot_idx = _joint_rotation_index(model)
    W = np.zeros((J, 4, 4))
    for j in model.topo_order:
        p = int(model.joint_parents[j])
        off = model.rest_joints[j] - (model.rest_joints[p] if p >= 0 else 0.0)
        L = np.eye(4)
        L[:3, 3] = off
        if rot_idx[j] >= 0:
            L[:3, :3] = so3.rotvec_to_matrix(pose.joint_rotations[rot_idx[j]])
        W[j] = (W[p] if p >= 0 else np.eye(4)) @ L
    return W


def _skinning_matrices(model: HandModel, W: np.ndarray) -> np.ndarray:
    """G_j = W_j * Trans(-rest_joint_j); identity at the rest pose."""
    G = W.copy()
    G[:, :3, 3] -= np.einsum('jab,jb->ja', W[:, :3, :3], model.rest_joints)
    return G


def pose_vertices(model: HandModel, pose: HandPose) -> np.ndarray:
    """Linear-blend-skinned vertex positions under a pose, (N, 3)."""
    W = _forward_kinematics(model, pose)
    G = _skinning_matrices(model, W)
    # per-joint transformed rest vertices: (J, N, 3)
    tv = np.einsum('jab,nb->jna', G[:, :3, :3], model.rest_vertices) + G[:, None, :3, 3]
    skinned = np.einsum('nj,jna->na', model.skin_weights, tv)
    Rg = so3.rotvec_to_matrix(pose.global_rotation)
    return skinned @ Rg.T + pose.global_translation


def pose_hand(model: HandModel, pose: HandPose) -> TriMesh:
    """Posed hand mesh with freshly computed area-weighted normals."""
    return TriMesh(pose_vertices(model, pose), model.faces).with_normals()


def keypoints(model: HandModel, pose: HandPose) -> np.ndarray:
    """The 21 keypoints: posed joint centers, then fingertip (and padding)
    mesh vertices, in model order."""
    W = _forward_kinematics(model, pose)
    Rg = so3.rotvec_to_matrix(pose.global_rotation)
    joints = W[:, :3, 3] @ Rg.T + pose.global_translation
    verts = pose_vertices(model, pose)
    ids = np.concatenate([model.fingertip_vertex_ids, model.pad_keypoint_vertex_ids])
    return np.concatenate([joints, verts[ids]], axis=0)


def perturb_pose(pose: HandPose, sigma_rot: float, sigma_trans: float,
                 rng: np.random.Generator) -> HandPose:
    """Gaussian resampling around a pose: joint rotations get N(0, sigma_rot)
    per component, the global translation N(0, sigma_trans) per axis."""
    if sigma_rot < 0 or sigma_trans < 0:
        raise ValueError("perturbation scales must be nonnegative")
    jr = pose.joint_rotations + rng.normal(0.0, sigma_rot, pose.joint_rotations.shape) \
        if sigma_rot > 0 else pose.joint_rotations.copy()
    gt = pose.global_translation + rng.normal(0.0, sigma_trans, 3) \
        if sigma_trans > 0 else pose.global_translation.copy()
    jr = np.stack([so3.canonicalize_rotvec(r) for r in jr]) if len(jr) else jr
    return HandPose(pose.global_rotation.copy(), gt, jr)


# ---------------------------------------------------------------------------
# analytic pose Jacobian
# ---------------------------------------------------------------------------


def _affine_inverse(M: np.ndarray) -> np.ndarray:
    out = np.eye(4)
    Rt = M[:3, :3].T
    out[:3, :3] = Rt
    out[:3, 3] = -Rt @ M[:3, 3]
    return out


def pose_jacobians(model: HandModel, pose: HandPose):
    """Jacobians of posed vertices and keypoints w.r.t. the pose vector.

    Parameter layout matches HandPose.as_vector(): global rotation (3),
    global translation (3), then per-non-root-joint axis-angle (3 each).
    Returns (vertex_jac (N, 3, P), keypoint_jac (21, 3, P)).
    """
    N, J = len(model.rest_vertices), model.num_joints
    P = 6 + 3 * (J - 1)
    rot_idx = _joint_rotation_index(model)
    W = _forward_kinematics(model, pose)
    G = _skinning_matrices(model, W)
    Rg, dRg = so3.rotvec_matrix_jacobian(pose.global_rotation)

    # weighted per-joint contributions to the skinned position
    tv = np.einsum('jab,nb->jna', G[:, :3, :3], model.rest_vertices) + G[:, None, :3, 3]
    contrib = model.skin_weights.T[:, :, None] * tv      # (J, N, 3)
    wcontrib = model.skin_weights.T.copy()               # (J, N)

    # subtree sums: S[k] = contrib over k and all its descendants
    S = contrib.copy()
    Sw = wcontrib.copy()
    for j in model.topo_order[::-1]:
        p = int(model.joint_parents[j])
        if p >= 0:
            S[p] += S[j]
            Sw[p] += Sw[j]
    skinned = S[model.root]                              # (N, 3)

    joint_pos = W[:, :3, 3]                              # (J, 3) pre-global
    # desc[k, m] True iff m is in the subtree of k
    desc = np.zeros((J, J), dtype=bool)
    for m in range(J):
        k = m
        while k >= 0:
            desc[k, m] = True
            k = int(model.joint_parents[k])

    vjac = np.zeros((N, 3, P))
    kjac = np.zeros((model.keypoint_count, 3, P))

    # global rotation / translation columns
    for c in range(3):
        vjac[:, :, c] = skinned @ dRg[c].T
        kjac[:J, :, c] = joint_pos @ dRg[c].T
        vjac[:, c, 3 + c] = 1.0
        kjac[:J, c, 3 + c] = 1.0

    # joint articulation columns
    for k in range(J):
        r = rot_idx[k]
        if r < 0:
            continue
        p = int(model.joint_parents[k])
        Mk = (W[p] if p >= 0 else np.eye(4)).copy()
        off = model.rest_joints[k] - (model.rest_joints[p] if p >= 0 else 0.0)
        Mk = Mk @ np.array([[1, 0, 0, off[0]], [0, 1, 0, off[1]],
                            [0, 0, 1, off[2]], [0, 0, 0, 1.0]])
        Rk, dRk = so3.rotvec_matrix_jacobian(pose.joint_rotations[r])
        Mk_inv = _affine_inverse(Mk)
        for c in range(3):
            D = np.zeros((4, 4))
            D[:3, :3] = dRk[c] @ Rk.T
            Phi = Mk @ D @ Mk_inv                        # (4, 4), last row 0
            A, btrans = Phi[:3, :3], Phi[:3, 3]
            col = 6 + 3 * r + c
            dv = S[k] @ A.T + Sw[k][:, None] * btrans
            vjac[:, :, col] = dv @ Rg.T
            # joint centers in the subtree of k move with Phi as well
            moved = desc[k]
            dq = joint_pos[moved] @ A.T + btrans
            kjac[:J][moved, :, col] = dq @ Rg.T

    # fingertip / padding keypoints reuse vertex rows
    ids = np.concatenate([model.fingertip_vertex_ids, model.pad_keypoint_vertex_ids])
    kjac[J:] = vjac[ids]
    return vjac, kjac
