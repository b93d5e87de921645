"""Axis-angle rotation helpers shared by the hand model and the fusion solver."""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

_EPS = 1e-12


def rotvec_to_matrix(w: np.ndarray) -> np.ndarray:
    return Rotation.from_rotvec(np.asarray(w, dtype=float)).as_matrix()


def matrix_to_rotvec(R: np.ndarray) -> np.ndarray:
    return Rotation.from_matrix(np.asarray(R, dtype=float)).as_rotvec()


def hat(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotvec_matrix_jacobian(w: np.ndarray):
    """Rotation matrix R(w) and its partials dR/dw_c, c = 0..2.

    Closed form from Gallego & Yezzi; the w -> 0 limit is dR/dw_c = hat(e_c).
    Returns (R, [dR0, dR1, dR2]).
    """
    w = np.asarray(w, dtype=float).reshape(3)
    R = rotvec_to_matrix(w)
    n2 = float(w @ w)
    if n2 < _EPS:
        return R, [hat(e) for e in np.eye(3)]
    partials = []
    for c in range(3):
        e = np.zeros(3)
        e[c] = 1.0
        a = w[c] * hat(w) + hat(np.cross(w, (np.eye(3) - R) @ e))
        partials.append((a / n2) @ R)
    return R, partials


def canonicalize_rotvec(w: np.ndarray) -> np.ndarray:
    """Wrap an axis-angle vector to magnitude in [0, pi)."""
    w = np.asarray(w, dtype=float).reshape(3)
    theta = np.linalg.norm(w)
    if theta < _EPS:
        return w.copy()
    wrapped = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return w * (wrapped / theta)


def slerp_rotvec(wa: np.ndarray, wb: np.ndarray, t: float) -> np.ndarray:
    """Shortest-geodesic interpolation between two axis-angle rotations."""
    qa = Rotation.from_rotvec(np.asarray(wa, dtype=float)).as_quat()
    qb = Rotation.from_rotvec(np.asarray(wb, dtype=float)).as_quat()
    if qa @ qb < 0.0:
        qb = -qb
    dot = np.clip(qa @ qb, -1.0, 1.0)
    omega = np.arccos(dot)
    if omega < 1e-10:
        q = (1.0 - t) * qa + t * qb
    else:
        q = (np.sin((1.0 - t) * omega) * qa + np.sin(t * omega) * qb) / np.sin(omega)
    q = q / np.linalg.norm(q)
    return Rotation.from_quat(q).as_rotvec()


def geodesic_distance(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Rotation angle of Ra^T Rb, radians."""
    cos = (np.trace(Ra.T @ Rb) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def quaternion_mean(quats: np.ndarray) -> np.ndarray:
    """Sign-aligned normalized mean of unit quaternions (xyzw)."""
    quats = np.asarray(quats, dtype=float).reshape(-1, 4)
    ref = quats[0]
    aligned = np.where((quats @ ref)[:, None] < 0.0, -quats, quats)
    m = aligned.mean(axis=0)
    return m / np.linalg.norm(m)
