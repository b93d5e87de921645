"""Fusing a grasp hand into a body frame, carrying the object along, and
deriving a smoothed egocentric camera trajectory from head geometry.

The fusion objective is a vertex-to-vertex sum of squared distances
between mapped hand vertices and their body-side targets, minimized over
a rigid motion (axis-angle + translation) -- optionally jointly with the
hand articulation -- using a trust-region Newton-CG solver with a
Gauss-Newton Hessian, capped at 300 iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from . import so3
from .geometry import RigidTransform
from .hand import HandModel, HandPose, pose_jacobians, pose_vertices


@dataclass
class BodyFrame:
    body_hand_vertices: np.ndarray   # (K, 3) target right-hand-region vertices
    head_vertices: np.ndarray        # (H, 3)
    head_rotation: np.ndarray        # (3, 3) orthonormal
    vertex_map: np.ndarray           # (M, 2): hand-model vertex id -> body vertex id

    def __post_init__(self):
        self.body_hand_vertices = np.asarray(self.body_hand_vertices, dtype=float).reshape(-1, 3)
        self.head_vertices = np.asarray(self.head_vertices, dtype=float).reshape(-1, 3)
        self.head_rotation = np.asarray(self.head_rotation, dtype=float).reshape(3, 3)
        if not np.allclose(self.head_rotation.T @ self.head_rotation, np.eye(3), atol=1e-6):
            raise ValueError("head rotation is not orthonormal")
        self.vertex_map = np.asarray(self.vertex_map, dtype=np.int64).reshape(-1, 2)
        body_ids = self.vertex_map[:, 1]
        if len(np.unique(body_ids)) != len(body_ids):
            raise ValueError("vertex map is not injective on body vertex ids")
        if body_ids.size and body_ids.max() >= len(self.body_hand_vertices):
            raise ValueError("vertex map references a body vertex out of range")


@dataclass
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])


@dataclass
class CameraPose:
    extrinsic: RigidTransform        # world -> camera
    intrinsics: CameraIntrinsics


@dataclass
class FuseConfig:
    max_iters: int = 300
    gtol: float = 1e-10
    optimize_articulation: bool = False


@dataclass
class FuseResult:
    rotation: np.ndarray            # (3, 3)
    translation: np.ndarray         # (3,)
    refined_pose: HandPose
    residual_rms: float             # meters
    loss_trace: list[float] = field(default_factory=list)


class UnderdeterminedError(ValueError):
    pass


def fuse_frame(body_frame: BodyFrame, hand_model: HandModel,
               grasp_pose: HandPose, config: FuseConfig | None = None) -> FuseResult:
    """Minimize sum_i || target_i - (R * hand_i + T) ||^2 over (R, T)
    (and optionally the hand articulation)."""
    cfg = config or FuseConfig()
    vmap = body_frame.vertex_map
    if len(vmap) < 3:
        raise UnderdeterminedError(
            f"need at least 3 mapped vertices, got {len(vmap)}")
    hand_ids = vmap[:, 0]
    targets = body_frame.body_hand_vertices[vmap[:, 1]]

    if not cfg.optimize_articulation:
        base = pose_vertices(hand_model, grasp_pose)[hand_ids]

        def unpack(x):
            return x[:3], x[3:6]

        def residuals_jac(x):
            w, T = unpack(x)
            R, dR = so3.rotvec_matrix_jacobian(w)
            moved = base @ R.T + T
            r = (targets - moved).ravel()
            Jc = np.zeros((len(base), 3, 6))
            for c in range(3):
                Jc[:, :, c] = -(base @ dR[c].T)
                Jc[:, c, 3 + c] = -1.0
            return r, Jc.reshape(-1, 6)
        x0 = np.zeros(6)
    else:
        nj = 3 * (hand_model.num_joints - 1)

        def residuals_jac(x):
            w, T = x[:3], x[3:6]
            pose = HandPose.from_vector(
                np.concatenate([grasp_pose.global_rotation,
                                grasp_pose.global_translation, x[6:]]),
                canonicalize=False)
            verts = pose_vertices(hand_model, pose)[hand_ids]
            vjac, _ = pose_jacobians(hand_model, pose)
            vjac = vjac[hand_ids][:, :, 6:]          # articulation block only
            R, dR = so3.rotvec_matrix_jacobian(w)
            moved = verts @ R.T + T
            r = (targets - moved).ravel()
            J = np.zeros((len(verts), 3, 6 + nj))
            for c in range(3):
                J[:, :, c] = -(verts @ dR[c].T)
                J[:, c, 3 + c] = -1.0
            J[:, :, 6:] = -np.einsum('ab,nbp->nap', R, vjac)
            return r, J.reshape(-1, 6 + nj)
        x0 = np.concatenate([np.zeros(6), grasp_pose.joint_rotations.ravel()])

    cache = {}

    def fetch(x):
        key = x.tobytes()
        if cache.get("key") != key:
            r, J = residuals_jac(x)
            cache.update(key=key, r=r, J=J)
        return cache["r"], cache["J"]

    def fun(x):
        r, _ = fetch(x)
        return float(r @ r)

    def jac(x):
        r, J = fetch(x)
        return 2.0 * J.T @ r

    def hessp(x, p):
        _, J = fetch(x)
        return 2.0 * J.T @ (J @ p)      # Gauss-Newton approximation

    trace = []
    res = minimize(fun, x0, method="trust-ncg", jac=jac, hessp=hessp,
                   options={"maxiter": cfg.max_iters, "gtol": cfg.gtol},
                   callback=lambda xk: trace.append(fun(xk)))
    x = res.x
    R = so3.rotvec_to_matrix(x[:3])
    T = x[3:6]
    if cfg.optimize_articulation:
        refined = HandPose.from_vector(
            np.concatenate([grasp_pose.global_rotation,
                            grasp_pose.global_translation, x[6:]]))
    else:
        refined = grasp_pose.copy()
    r, _ = fetch(x)
    rms = float(np.sqrt(np.mean(r ** 2)))   # per-coordinate RMS, meters
    return FuseResult(R, T, refined, rms, [fun(x0)] + trace)


def apply_to_object(object_transform: RigidTransform, R: np.ndarray,
                    T: np.ndarray) -> RigidTransform:
    """Carry the grasped object with the recovered body-fusion motion."""
    return RigidTransform(R, T).compose(object_transform)


DEFAULT_CAMERA_OFFSET = RigidTransform(np.eye(3), np.array([0.0, 0.0, 0.05]))


def camera_from_head(head_vertices: np.ndarray, head_rotation: np.ndarray,
                     offset: RigidTransform | None = None) -> RigidTransform:
    """Egocentric camera extrinsic (world -> camera) from head geometry.

    The camera frame is (head rotation, head-vertex centroid) composed
    with a configurable offset; the default shifts 5 cm along the head
    forward (+z) axis, optical axis along head forward.
    """
    head_vertices = np.asarray(head_vertices, dtype=float).reshape(-1, 3)
    if len(head_vertices) < 1:
        raise ValueError("need at least one head vertex")
    if offset is None:
        offset = DEFAULT_CAMERA_OFFSET
    head_frame = RigidTransform(head_rotation, head_vertices.mean(axis=0))
    camera_frame = head_frame.compose(offset)   # camera -> world
    return camera_frame.inverse()


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with shrunken windows at the endpoints."""
    n = len(values)
    half = window // 2
    out = np.empty_like(values)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out[i] = values[lo:hi].mean(axis=0)
    return out


def smooth_trajectory(poses: list[RigidTransform], window: int = 9,
                      outlier_k: float = 3.0) -> list[RigidTransform]:
    """Jitter removal for a camera pose sequence.

    Translation: sliding-median outlier replacement (deviation beyond
    outlier_k times the window MAD is re-interpolated from neighbors),
    then a moving average. Rotation: per-window sign-aligned quaternion
    mean, renormalized. Sequences shorter than 3 are returned unchanged.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    n = len(poses)
    if n < 3:
        return list(poses)
    half = window // 2
    trans = np.stack([p.translation for p in poses])

    # outlier detection against the sliding median
    deviations = np.empty(n)
    medians = np.empty_like(trans)
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        medians[i] = np.median(trans[lo:hi], axis=0)
        deviations[i] = np.linalg.norm(trans[i] - medians[i])
    flagged = np.zeros(n, dtype=bool)
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        mad = np.median(deviations[lo:hi])
        if deviations[i] > outlier_k * mad + 1e-12:
            flagged[i] = True
    if flagged.any() and not flagged.all():
        good = np.flatnonzero(~flagged)
        for axis in range(3):
            trans[flagged, axis] = np.interp(np.flatnonzero(flagged), good,
                                             trans[good, axis])
    trans = _moving_average(trans, window)

    quats = np.stack([Rotation.from_matrix(p.rotation).as_quat() for p in poses])
    # align signs along the sequence before windowed averaging
    for i in range(1, n):
        if quats[i] @ quats[i - 1] < 0:
            quats[i] = -quats[i]
    rots = []
    for i in range(n):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        q = so3.quaternion_mean(quats[lo:hi])
        rots.append(Rotation.from_quat(q).as_matrix())
    return [RigidTransform(Rk, tk) for Rk, tk in zip(rots, trans)]
