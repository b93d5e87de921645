"""Hand/object pose evaluation: 2D re-projection error, MPJPE, PVE, their
Procrustes-aligned variants, threshold-accuracy curves, and the 2D
control-point error for object pose. 3D errors are in millimeters, 2D in
pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fusion import CameraIntrinsics


@dataclass
class PoseEstimate:
    joints3d: np.ndarray                      # (21, 3) mm, camera frame
    vertices3d: np.ndarray | None = None      # (N, 3) mm
    control_points2d: np.ndarray | None = None  # (8, 2) px

    def __post_init__(self):
        self.joints3d = np.asarray(self.joints3d, dtype=float).reshape(-1, 3)
        if self.joints3d.shape[0] != 21:
            raise ValueError(f"expected 21 joints, got {self.joints3d.shape[0]}")
        if self.vertices3d is not None:
            self.vertices3d = np.asarray(self.vertices3d, dtype=float).reshape(-1, 3)
        if self.control_points2d is not None:
            self.control_points2d = np.asarray(self.control_points2d, dtype=float).reshape(8, 2)


@dataclass
class MetricReport:
    p2d: float
    mpjpe: float
    pve: float | None
    pa_mpjpe: float
    pa_pve: float | None
    accuracy_curve: list[tuple[float, float]] = field(default_factory=list)
    control_point_error: float | None = None
    coverage: float = 1.0
    excluded_behind_camera: int = 0

    def table(self) -> str:
        """Plain-text row mirroring the standard column set."""
        cols = ["P2d", "MPJPE", "PVE", "PA-MPJPE", "PA-PVE", "CtrlPt"]
        vals = [self.p2d, self.mpjpe, self.pve, self.pa_mpjpe, self.pa_pve,
                self.control_point_error]
        header = " | ".join(f"{c:>9}" for c in cols)
        row = " | ".join("      ---" if v is None else f"{v:9.2f}" for v in vals)
        return header + "\n" + row


def project_points(points3d: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Pinhole projection of camera-frame points (any length unit) to pixels."""
    pts = np.asarray(points3d, dtype=float)
    return np.stack([
        intrinsics.fx * pts[..., 0] / pts[..., 2] + intrinsics.cx,
        intrinsics.fy * pts[..., 1] / pts[..., 2] + intrinsics.cy,
    ], axis=-1)


def reprojection_error(pred3d: np.ndarray, gt2d: np.ndarray,
                       intrinsics: CameraIntrinsics):
    """Mean pixel distance between projected prediction and 2D ground truth.

    Points at or behind the camera plane are excluded; returns
    (error, excluded count).
    """
    pred3d = np.asarray(pred3d, dtype=float).reshape(-1, 3)
    gt2d = np.asarray(gt2d, dtype=float).reshape(-1, 2)
    if len(pred3d) != len(gt2d):
        raise ValueError("prediction / ground-truth length mismatch")
    in_front = pred3d[:, 2] > 1e-9
    excluded = int(np.sum(~in_front))
    if not in_front.any():
        raise ValueError("all points are behind the camera")
    proj = project_points(pred3d[in_front], intrinsics)
    err = float(np.mean(np.linalg.norm(proj - gt2d[in_front], axis=1)))
    return err, excluded


def mpjpe(pred: np.ndarray, gt: np.ndarray, root_align: bool = True) -> float:
    """Mean per-joint position error (mm); wrist-relative by default."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if root_align:
        pred = pred - pred[0]
        gt = gt - gt[0]
    return float(np.mean(np.linalg.norm(pred - gt, axis=1)))


def pve(pred_vertices: np.ndarray, gt_vertices: np.ndarray,
        root: np.ndarray | None = None, gt_root: np.ndarray | None = None) -> float:
    """Per-vertex error (mm), optionally after root alignment."""
    pred = np.asarray(pred_vertices, dtype=float)
    gt = np.asarray(gt_vertices, dtype=float)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if root is not None:
        pred = pred - np.asarray(root, dtype=float)
        gt = gt - np.asarray(gt_root if gt_root is not None else root, dtype=float)
    return float(np.mean(np.linalg.norm(pred - gt, axis=1)))


def procrustes_align(source: np.ndarray, target: np.ndarray,
                     with_scale: bool = True):
    """Closed-form similarity fit min || s R source + t - target ||^2.

    Reflections are excluded (det(R) = +1). Returns (scale, rotation,
    translation). Degenerate (collinear) point sets are an error.
    """
    src = np.asarray(source, dtype=float)
    tgt = np.asarray(target, dtype=float)
    if src.shape != tgt.shape or src.shape[0] < 3:
        raise ValueError("need matching point sets with at least 3 points")
    mu_s = src.mean(axis=0)
    mu_t = tgt.mean(axis=0)
    xs = src - mu_s
    xt = tgt - mu_t
    cov = xt.T @ xs
    U, S, Vt = np.linalg.svd(cov)
    if S[1] < 1e-12 * max(S[0], 1e-300):
        raise ValueError("degenerate (collinear) point configuration")
    d = np.sign(np.linalg.det(U @ Vt))
    D = np.diag([1.0, 1.0, d])
    R = U @ D @ Vt
    if with_scale:
        var_s = np.sum(xs ** 2)
        scale = float(np.trace(np.diag(S) @ D) / var_s)
    else:
        scale = 1.0
    t = mu_t - scale * R @ mu_s
    return scale, R, t


def pa_metric(pred: np.ndarray, gt: np.ndarray, with_scale: bool = True) -> float:
    """Mean point error after optimal similarity alignment of pred onto gt."""
    s, R, t = procrustes_align(pred, gt, with_scale=with_scale)
    aligned = s * np.asarray(pred, dtype=float) @ R.T + t
    return float(np.mean(np.linalg.norm(aligned - np.asarray(gt, dtype=float), axis=1)))


def accuracy_curve(errors: np.ndarray, thresholds: np.ndarray):
    """Fraction of frames with error <= threshold, per threshold."""
    errors = np.asarray(errors, dtype=float).ravel()
    thresholds = np.asarray(thresholds, dtype=float).ravel()
    if np.any(np.diff(thresholds) < 0):
        raise ValueError("thresholds must be sorted ascending")
    return [(float(th), float(np.mean(errors <= th))) for th in thresholds]


def control_point_error(pred2d: np.ndarray, gt2d: np.ndarray) -> float:
    """Mean pixel distance over the 8 projected bounding-box corners."""
    pred2d = np.asarray(pred2d, dtype=float)
    gt2d = np.asarray(gt2d, dtype=float)
    if pred2d.shape != (8, 2) or gt2d.shape != (8, 2):
        raise ValueError("control points must be 8 x 2 arrays")
    return float(np.mean(np.linalg.norm(pred2d - gt2d, axis=1)))


def bounding_box_corners(mesh_vertices: np.ndarray) -> np.ndarray:
    """The 8 corners of the axis-aligned bounding box in the object's
    canonical frame; these are the object control points."""
    v = np.asarray(mesh_vertices, dtype=float)
    lo, hi = v.min(axis=0), v.max(axis=0)
    return np.array([[x, y, z]
                     for x in (lo[0], hi[0])
                     for y in (lo[1], hi[1])
                     for z in (lo[2], hi[2])])
