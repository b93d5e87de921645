"""Multi-view skeleton geometry: confidence-gated triangulation,
bone-length regularization, and temporal velocity smoothing.

Operates on synthetic or externally produced 2D observations; 2D keypoint
detection itself is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import minimize

from .fusion import CameraIntrinsics
from .geometry import RigidTransform

DEFAULT_CONFIDENCE_THRESHOLD = 0.3


@dataclass
class Camera:
    intrinsics: CameraIntrinsics
    extrinsic: RigidTransform         # world -> camera

    def projection_matrix(self) -> np.ndarray:
        K = self.intrinsics.matrix()
        Rt = np.hstack([self.extrinsic.rotation,
                        self.extrinsic.translation[:, None]])
        return K @ Rt

    def project(self, points: np.ndarray) -> np.ndarray:
        pts = self.extrinsic.apply(points)
        return pts[..., :2] * (self.intrinsics.fx, self.intrinsics.fy) / pts[..., 2:3] \
            + (self.intrinsics.cx, self.intrinsics.cy)


@dataclass
class CameraRig:
    cameras: list[Camera]

    def __post_init__(self):
        if len(self.cameras) < 2:
            raise ValueError("rig needs at least two cameras")
        for i, a in enumerate(self.cameras):
            for b in self.cameras[i + 1:]:
                if (np.allclose(a.extrinsic.rotation, b.extrinsic.rotation)
                        and np.allclose(a.extrinsic.translation, b.extrinsic.translation)):
                    raise ValueError("two cameras share identical extrinsics (degenerate baseline)")


@dataclass
class Observation2D:
    """Per-camera pixel observation of one keypoint with confidence."""
    uv: np.ndarray          # (C, 2)
    confidence: np.ndarray  # (C,), each in [0, 1]

    def __post_init__(self):
        self.uv = np.asarray(self.uv, dtype=float).reshape(-1, 2)
        self.confidence = np.asarray(self.confidence, dtype=float).reshape(-1)
        if np.any((self.confidence < 0) | (self.confidence > 1)):
            raise ValueError("confidences must lie in [0, 1]")
        if len(self.uv) != len(self.confidence):
            raise ValueError("uv / confidence length mismatch")


class TriangulationError(RuntimeError):
    pass


def triangulate(obs: Observation2D, rig: CameraRig,
                conf_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD):
    """Confidence-weighted inhomogeneous DLT. Returns (point, inlier count).

    Cameras below the confidence threshold are excluded; fewer than two
    confident views, or a rank-deficient system (e.g. identical rays), is
    an error.
    """
    keep = np.flatnonzero(obs.confidence >= conf_threshold)
    if len(keep) < 2:
        raise TriangulationError(
            f"only {len(keep)} view(s) at confidence >= {conf_threshold}")
    rows = []
    rhs = []
    for ci in keep:
        P = rig.cameras[ci].projection_matrix()
        u, v = obs.uv[ci]
        w = obs.confidence[ci]
        rows.append(w * (u * P[2, :3] - P[0, :3]))
        rhs.append(-w * (u * P[2, 3] - P[0, 3]))
        rows.append(w * (v * P[2, :3] - P[1, :3]))
        rhs.append(-w * (v * P[2, 3] - P[1, 3]))
    A = np.stack(rows)
    b = np.asarray(rhs)
    AtA = A.T @ A
    cond = np.linalg.cond(AtA)
    if not np.isfinite(cond) or cond > 1e12:
        raise TriangulationError("degenerate viewing geometry (rays do not intersect)")
    x = np.linalg.solve(AtA, A.T @ b)
    return x, len(keep)


def regularize_bone_lengths(skeleton_seq: np.ndarray, bones: np.ndarray,
                            lambda_bone: float = 1.0, gtol: float = 1e-8):
    """Pull per-frame bone lengths toward their per-sequence medians.

    Minimizes ||x - x_obs||^2 + lambda * sum (|bone| - median length)^2
    with a quasi-Newton solver on the analytic gradient.
    """
    obs = np.asarray(skeleton_seq, dtype=float)
    F, K, _ = obs.shape
    bones = np.asarray(bones, dtype=np.int64).reshape(-1, 2)
    if bones.size and bones.max() >= K:
        raise ValueError("bone index out of range")

    lengths = np.linalg.norm(obs[:, bones[:, 0]] - obs[:, bones[:, 1]], axis=2)
    target = np.median(lengths, axis=0)   # per-bone median over the sequence

    def split(x):
        return x.reshape(F, K, 3)

    def fun_grad(x):
        pts = split(x)
        diff = pts - obs
        val = float(np.sum(diff ** 2))
        grad = 2.0 * diff
        vec = pts[:, bones[:, 0]] - pts[:, bones[:, 1]]       # (F, B, 3)
        lens = np.linalg.norm(vec, axis=2)
        err = lens - target
        val += lambda_bone * float(np.sum(err ** 2))
        unit = vec / np.maximum(lens, 1e-12)[..., None]
        g = 2.0 * lambda_bone * err[..., None] * unit
        np.add.at(grad, (slice(None), bones[:, 0]), g)
        np.add.at(grad, (slice(None), bones[:, 1]), -g)
        return val, grad.ravel()

    res = minimize(fun_grad, obs.ravel(), jac=True, method="L-BFGS-B",
                   options={"gtol": gtol, "maxiter": 500})
    return split(res.x).copy()


def temporal_smooth(seq: np.ndarray, lambda_vel: float) -> np.ndarray:
    """Exact velocity-penalized smoothing.

    Solves min ||x - obs||^2 + lambda * sum_t ||x_t - x_{t-1}||^2 via its
    tridiagonal normal equations, independently per keypoint coordinate.
    """
    if lambda_vel < 0:
        raise ValueError("lambda_vel must be nonnegative")
    obs = np.asarray(seq, dtype=float)
    F = obs.shape[0]
    if F < 2 or lambda_vel == 0.0:
        return obs.copy()
    flat = obs.reshape(F, -1)

    diag = np.full(F, 1.0 + 2.0 * lambda_vel)
    diag[0] = diag[-1] = 1.0 + lambda_vel
    off = np.full(F - 1, -lambda_vel)
    ab = np.zeros((3, F))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    out = solve_banded((1, 1), ab, flat)
    return out.reshape(obs.shape)
