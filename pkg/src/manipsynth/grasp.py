"""Grasp refinement objective and candidate filtering.

The refinement objective is a weighted sum of three terms evaluated on the
posed hand mesh against a fixed object mesh:

  * penetration: mean squared distance of object vertices inside the hand
    to their nearest hand vertex,
  * contact: summed squared distance of selected hand vertices to the
    nearest object surface point,
  * keypoint: summed squared displacement of the 21 hand keypoints from a
    reference set.

Gradients are analytic under frozen correspondences (exact almost
everywhere), driving a normalized-gradient descent with Armijo
backtracking. Refined candidates are scored by interpenetration volume and
contact-vertex count and partitioned into accepted/rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (OpenMeshError, SpatialIndex, TriMesh, classify_inside,
                       penetration_volume)
from .hand import HandModel, HandPose, keypoints, pose_jacobians, pose_vertices

OBJECT_CLASSES = ("scalpel", "friem", "diskplacer", "other")


@dataclass(frozen=True)
class LossWeights:
    """Object-specific scaling of the three loss terms."""

    alpha: float = 1.0   # penetration
    beta: float = 1.0    # contact
    gamma: float = 1.0   # keypoint

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("loss weights must be nonnegative")
        if self.alpha == 0 and self.beta == 0 and self.gamma == 0:
            raise ValueError("at least one loss weight must be positive")

    @staticmethod
    def for_class(object_class: str) -> "LossWeights":
        # penetration is down-weighted for the scalpel (small object)
        if object_class == "scalpel":
            return LossWeights(0.5, 1.0, 1.0)
        return LossWeights(1.0, 1.0, 1.0)


@dataclass
class RefineConfig:
    max_iters: int = 200
    fd_step: float = 1e-5          # central-difference step for gradient checks
    armijo_c: float = 1e-4
    rel_tol: float = 1e-6
    init_step: float = 0.01
    min_step: float = 1e-12


@dataclass
class FilterThresholds:
    max_penetration_cm3: float = 4.0
    min_contact_vertices: int = 10
    contact_distance: float = 0.0025   # meters
    voxel_size: float = 0.002


@dataclass
class GraspCandidate:
    candidate_id: str
    object_class: str
    hand_pose: HandPose
    object_mesh: TriMesh
    refine_trace: list[float] = field(default_factory=list)
    scores: dict = field(default_factory=dict)
    status: str = "raw"   # raw | refined | accepted | rejected | template


# ---------------------------------------------------------------------------
# loss terms
# ---------------------------------------------------------------------------


def _require_closed_hand(hand_mesh: TriMesh):
    if hand_mesh.vertex_normals is None:
        raise OpenMeshError("hand mesh needs vertex normals for the inside test")
    if not hand_mesh.is_closed():
        raise OpenMeshError("penetration loss requires a closed hand mesh")


def loss_penetration(hand_mesh: TriMesh, object_mesh: TriMesh,
                     hand_index: SpatialIndex | None = None) -> float:
    """Mean squared distance of inside-the-hand object vertices to the
    nearest hand vertex; 0 when nothing penetrates."""
    _require_closed_hand(hand_mesh)
    if hand_index is None:
        hand_index = SpatialIndex(hand_mesh)
    inside = classify_inside(hand_index, object_mesh.vertices)
    if not inside.any():
        return 0.0
    tree = cKDTree(hand_mesh.vertices)
    d, _ = tree.query(object_mesh.vertices[inside])
    return float(np.mean(d ** 2))


def loss_contact(hand_mesh: TriMesh, object_mesh: TriMesh,
                 hand_mask: np.ndarray | None = None,
                 object_index: SpatialIndex | None = None,
                 literal_object_sum: bool = False) -> float:
    """Summed squared nearest-surface distance encouraging contact.

    Default reading: sum over masked hand vertices of squared distance to
    the object surface. literal_object_sum instead sums over object
    vertices their squared distance to the nearest hand vertex.
    """
    if len(hand_mesh.vertices) == 0 or len(object_mesh.vertices) == 0:
        raise ValueError("contact loss needs non-empty meshes")
    if literal_object_sum:
        tree = cKDTree(hand_mesh.vertices)
        d, _ = tree.query(object_mesh.vertices)
        return float(np.sum(d ** 2))
    if hand_mask is None:
        hand_mask = np.arange(len(hand_mesh.vertices))
    hand_mask = np.asarray(hand_mask, dtype=np.int64)
    if hand_mask.size == 0:
        raise ValueError("contact loss hand mask is empty")
    if object_index is None:
        object_index = SpatialIndex(object_mesh)
    _, d, _ = object_index.closest_points(hand_mesh.vertices[hand_mask])
    return float(np.sum(d ** 2))


def loss_keypoint(current: np.ndarray, reference: np.ndarray) -> float:
    """Summed squared keypoint displacement."""
    current = np.asarray(current, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if current.shape != reference.shape:
        raise ValueError(f"keypoint shape mismatch: {current.shape} vs {reference.shape}")
    return float(np.sum((current - reference) ** 2))


# ---------------------------------------------------------------------------
# total objective with analytic gradient
# ---------------------------------------------------------------------------


class GraspObjective:
    """total = alpha * penetration + beta * contact + gamma * keypoint,
    as a function of the hand pose vector against a fixed object."""

    def __init__(self, model: HandModel, object_mesh: TriMesh,
                 reference_keypoints: np.ndarray, weights: LossWeights,
                 contact_mask: np.ndarray | None = None,
                 literal_contact: bool = False):
        self.model = model
        self.object_mesh = object_mesh
        self.object_index = SpatialIndex(object_mesh)
        self.reference_keypoints = np.asarray(reference_keypoints, dtype=float)
        self.weights = weights
        self.literal_contact = literal_contact
        if contact_mask is None:
            contact_mask = model.default_contact_mask()
        self.contact_mask = np.asarray(contact_mask, dtype=np.int64)
        if self.contact_mask.size == 0:
            raise ValueError("contact mask is empty")
        self._closed_checked = False

    def _posed(self, pose_vec: np.ndarray):
        pose = HandPose.from_vector(pose_vec, canonicalize=False)
        verts = pose_vertices(self.model, pose)
        mesh = TriMesh(verts, self.model.faces).with_normals()
        return pose, verts, mesh

    def value(self, pose_vec: np.ndarray) -> float:
        return self._evaluate(pose_vec, with_grad=False)[0]

    def value_and_grad(self, pose_vec: np.ndarray):
        return self._evaluate(pose_vec, with_grad=True)

    def _evaluate(self, pose_vec, with_grad: bool):
        pose, verts, hand_mesh = self._posed(pose_vec)
        w = self.weights
        if not self._closed_checked:
            if w.alpha > 0:
                _require_closed_hand(hand_mesh)
            self._closed_checked = True

        # per-hand-vertex gradient of the geometric terms
        dL_dv = np.zeros_like(verts)
        total = 0.0

        if w.alpha > 0:
            hand_index = SpatialIndex(hand_mesh)
            inside = classify_inside(hand_index, self.object_mesh.vertices)
            if inside.any():
                p_in = self.object_mesh.vertices[inside]
                tree = cKDTree(verts)
                d, nn = tree.query(p_in)
                pen = float(np.mean(d ** 2))
                total += w.alpha * pen
                if with_grad:
                    g = -2.0 * (p_in - verts[nn]) / len(p_in)
                    np.add.at(dL_dv, nn, w.alpha * g)

        if w.beta > 0:
            if self.literal_contact:
                tree = cKDTree(verts)
                d, nn = tree.query(self.object_mesh.vertices)
                total += w.beta * float(np.sum(d ** 2))
                if with_grad:
                    g = -2.0 * (self.object_mesh.vertices - verts[nn])
                    np.add.at(dL_dv, nn, w.beta * g)
            else:
                hv = verts[self.contact_mask]
                pts, d, _ = self.object_index.closest_points(hv)
                total += w.beta * float(np.sum(d ** 2))
                if with_grad:
                    np.add.at(dL_dv, self.contact_mask, w.beta * 2.0 * (hv - pts))

        kp = None
        dL_dk = None
        if w.gamma > 0:
            kp = keypoints(self.model, pose)
            total += w.gamma * float(np.sum((kp - self.reference_keypoints) ** 2))
            if with_grad:
                dL_dk = w.gamma * 2.0 * (kp - self.reference_keypoints)

        if not with_grad:
            return total, None

        vjac, kjac = pose_jacobians(self.model, pose)
        grad = np.einsum('na,nap->p', dL_dv, vjac)
        if dL_dk is not None:
            grad += np.einsum('na,nap->p', dL_dk, kjac)
        return total, grad

    def fd_gradient(self, pose_vec: np.ndarray, step: float = 1e-5) -> np.ndarray:
        """Central-difference gradient, the independent check on the
        analytic one."""
        pose_vec = np.asarray(pose_vec, dtype=float)
        g = np.zeros_like(pose_vec)
        for i in range(len(pose_vec)):
            vp = pose_vec.copy()
            vp[i] += step
            vm = pose_vec.copy()
            vm[i] -= step
            g[i] = (self.value(vp) - self.value(vm)) / (2.0 * step)
        return g


def total_loss(model: HandModel, pose: HandPose, object_mesh: TriMesh,
               reference_keypoints: np.ndarray, weights: LossWeights,
               contact_mask: np.ndarray | None = None,
               literal_contact: bool = False) -> float:
    obj = GraspObjective(model, object_mesh, reference_keypoints, weights,
                         contact_mask, literal_contact)
    return obj.value(pose.as_vector())


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------


def refine_grasp(model: HandModel, init_pose: HandPose, object_mesh: TriMesh,
                 reference_keypoints: np.ndarray, weights: LossWeights,
                 config: RefineConfig | None = None,
                 contact_mask: np.ndarray | None = None,
                 objective: GraspObjective | None = None):
    """Normalized-gradient descent with Armijo backtracking.

    Returns (refined HandPose, trace of accepted loss values). The trace is
    non-increasing by construction; iteration stops on the relative-change
    tolerance, a vanishing step, or the iteration cap.
    """
    cfg = config or RefineConfig()
    if objective is None:
        objective = GraspObjective(model, object_mesh, reference_keypoints,
                                   weights, contact_mask)
    x = init_pose.as_vector()
    f, g = objective.value_and_grad(x)
    if not np.isfinite(f):
        raise ValueError("non-finite loss at the initial pose")
    trace = [f]
    # Barzilai-Borwein step with Armijo backtracking. Every quantity the
    # iteration branches on (Armijo inequality, relative decrease, the
    # alpha * |g| displacement) is invariant to scaling all loss weights by
    # a common positive factor, so the iterate sequence is too.
    alpha = None
    x_prev = g_prev = None
    for _ in range(cfg.max_iters):
        gnorm = np.linalg.norm(g)
        if gnorm < 1e-14 or f == 0.0:
            break
        if x_prev is None:
            alpha = cfg.init_step / gnorm
        else:
            s = x - x_prev
            y = g - g_prev
            sy = float(s @ y)
            alpha = float(s @ s) / sy if sy > 1e-30 else alpha * 2.0
        slope = -float(g @ g)
        accepted = False
        while alpha * gnorm >= cfg.min_step:
            f_new = objective.value(x - alpha * g)
            if np.isfinite(f_new) and f_new <= f + cfg.armijo_c * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        x_prev, g_prev = x, g
        x = x - alpha * g
        f_prev = f
        f, g = objective.value_and_grad(x)
        trace.append(f)
        if f_prev > 0 and (f_prev - f) / f_prev < cfg.rel_tol:
            break
    return HandPose.from_vector(x), trace


# ---------------------------------------------------------------------------
# scoring and filtering
# ---------------------------------------------------------------------------


def score_candidate(model: HandModel, pose: HandPose, object_mesh: TriMesh,
                    thresholds: FilterThresholds | None = None) -> dict:
    """Interpenetration volume (cm^3) and contact-vertex count for a pose."""
    th = thresholds or FilterThresholds()
    hand_mesh = TriMesh(pose_vertices(model, pose), model.faces).with_normals()
    vol_m3 = penetration_volume(hand_mesh, object_mesh, th.voxel_size)
    obj_index = SpatialIndex(object_mesh)
    _, d, _ = obj_index.closest_points(hand_mesh.vertices)
    contact_count = int(np.sum(d <= th.contact_distance))
    return {"penetrationVolumeCm3": vol_m3 * 1e6,
            "contactVertexCount": contact_count}


def filter_candidates(candidates: list[GraspCandidate], model: HandModel,
                      thresholds: FilterThresholds | None = None):
    """Partition candidates into (accepted, rejected), storing scores and
    updating status in place."""
    th = thresholds or FilterThresholds()
    accepted, rejected = [], []
    for cand in candidates:
        if not cand.scores:
            cand.scores = score_candidate(model, cand.hand_pose, cand.object_mesh, th)
        ok = (cand.scores["penetrationVolumeCm3"] <= th.max_penetration_cm3
              and cand.scores["contactVertexCount"] >= th.min_contact_vertices)
        cand.status = "accepted" if ok else "rejected"
        (accepted if ok else rejected).append(cand)
    return accepted, rejected
