import numpy as np
import pytest

from manipsynth import so3
from manipsynth.fusion import CameraIntrinsics
from manipsynth.metrics import (MetricReport, PoseEstimate, accuracy_curve,
                                bounding_box_corners, control_point_error,
                                mpjpe, pa_metric, procrustes_align,
                                project_points, pve, reprojection_error)

INTR = CameraIntrinsics(600.0, 600.0, 320.0, 240.0, 640, 480)


def random_joints(rng, n=21, depth=2.0):
    j = rng.normal(0, 0.1, (n, 3))
    j[:, 2] += depth
    return j


def test_pose_estimate_requires_21_joints():
    with pytest.raises(ValueError):
        PoseEstimate(np.zeros((20, 3)))


# -- reprojection ------------------------------------------------------------


def test_reprojection_exact_zero(rng):
    p = random_joints(rng)
    gt2d = project_points(p, INTR)
    err, excluded = reprojection_error(p, gt2d, INTR)
    assert err < 1e-12 and excluded == 0


def test_reprojection_three_four_five(rng):
    p = random_joints(rng)
    gt2d = project_points(p, INTR) - [3.0, 4.0]
    err, _ = reprojection_error(p, gt2d, INTR)
    assert abs(err - 5.0) < 1e-9


def test_reprojection_matches_hand_rolled_oracle(rng):
    p = random_joints(rng)
    gt2d = rng.uniform(0, 640, (21, 2))
    err, _ = reprojection_error(p, gt2d, INTR)
    proj = np.stack([600.0 * p[:, 0] / p[:, 2] + 320.0,
                     600.0 * p[:, 1] / p[:, 2] + 240.0], axis=1)
    oracle = np.mean(np.sqrt(np.sum((proj - gt2d) ** 2, axis=1)))
    assert abs(err - oracle) < 1e-12


def test_reprojection_behind_camera_excluded(rng):
    p = random_joints(rng)
    p[5, 2] = -1.0
    gt2d = project_points(np.abs(p) + [0, 0, 1], INTR)
    _, excluded = reprojection_error(p, gt2d, INTR)
    assert excluded == 1


# -- mpjpe / pve -------------------------------------------------------------


def test_mpjpe_zero(rng):
    p = random_joints(rng) * 1000
    assert mpjpe(p, p) == 0.0


def test_mpjpe_root_align_removes_offset(rng):
    gt = random_joints(rng) * 1000
    pred = gt + np.array([5.0, 0.0, 0.0])
    assert mpjpe(pred, gt) < 1e-12
    assert abs(mpjpe(pred, gt, root_align=False) - 5.0) < 1e-12


def test_mpjpe_uniform_anchor(rng):
    """Uniform per-joint error of 14.35 mm produces MPJPE exactly 14.35."""
    gt = random_joints(rng) * 1000
    pred = gt + 14.35 * _unit(rng, 21)
    assert abs(mpjpe(pred, gt, root_align=False) - 14.35) < 1e-9
    # same anchor under root alignment: displace in root-relative space
    dirs = _unit(rng, 21)
    pred2 = gt + 14.35 * dirs + np.array([7.0, -2.0, 3.0]) - 14.35 * dirs[0]
    assert abs(mpjpe(pred2, gt) - 14.35 * np.mean(
        np.linalg.norm(dirs - dirs[0], axis=1))) < 1e-9


def _unit(rng, n):
    d = rng.normal(0, 1, (n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def test_pve(rng):
    gt = rng.normal(0, 100, (778, 3))
    pred = gt + 2.5 * _unit(rng, 778)
    assert abs(pve(pred, gt) - 2.5) < 1e-9


# -- procrustes --------------------------------------------------------------


def test_procrustes_identity(rng):
    src = random_joints(rng)
    s, R, t = procrustes_align(src, src)
    assert abs(s - 1.0) < 1e-9
    np.testing.assert_allclose(R, np.eye(3), atol=1e-9)
    np.testing.assert_allclose(t, 0, atol=1e-9)


def test_procrustes_recovers_similarity(rng):
    src = random_joints(rng)
    R0 = so3.rotvec_to_matrix(np.array([0.4, -0.2, 0.9]))
    t0 = np.array([10.0, -3.0, 7.0])
    tgt = 2.0 * src @ R0.T + t0
    s, R, t = procrustes_align(src, tgt)
    assert abs(s - 2.0) < 1e-9
    np.testing.assert_allclose(R, R0, atol=1e-9)
    np.testing.assert_allclose(t, t0, atol=1e-8)


def test_procrustes_excludes_reflection(rng):
    src = random_joints(rng)
    tgt = src.copy()
    tgt[:, 2] *= -1.0                  # mirror
    s, R, t = procrustes_align(src, tgt)
    assert np.linalg.det(R) > 0.999
    aligned = s * src @ R.T + t
    assert np.mean(np.linalg.norm(aligned - tgt, axis=1)) > 1e-6


def test_procrustes_degenerate_collinear():
    src = np.stack([np.linspace(0, 1, 5)] * 3, axis=1)
    with pytest.raises(ValueError):
        procrustes_align(src, src * 2.0)


# -- pa_metric ---------------------------------------------------------------


def test_pa_zero_for_similarity(rng):
    gt = random_joints(rng) * 1000
    R0 = so3.rotvec_to_matrix(np.array([0.2, 0.5, -0.1]))
    pred = 1.7 * gt @ R0.T + np.array([40.0, -10.0, 5.0])
    assert pa_metric(pred, gt) < 1e-9


def test_pa_invariant_to_similarity_of_pred(rng):
    gt = random_joints(rng) * 1000
    pred = gt + rng.normal(0, 5.0, gt.shape)
    base = pa_metric(pred, gt)
    R0 = so3.rotvec_to_matrix(np.array([-0.3, 0.1, 0.8]))
    moved = 0.6 * pred @ R0.T + np.array([100.0, 2.0, -50.0])
    assert abs(pa_metric(moved, gt) - base) < 1e-9


def test_pa_never_worse_than_root_aligned(rng):
    for _ in range(10):
        gt = random_joints(rng) * 1000
        pred = gt + rng.normal(0, 8.0, gt.shape)
        assert pa_metric(pred, gt) <= mpjpe(pred, gt) + 1e-9


def test_pa_matches_numerical_polish(rng):
    """Closed-form alignment agrees with a numeric optimizer refined to 1e-10."""
    from scipy.optimize import minimize
    gt = random_joints(rng) * 1000
    pred = gt + rng.normal(0, 5.0, gt.shape)
    s0, R0, t0 = procrustes_align(pred, gt)

    def cost(x):
        s = x[0]
        R = so3.rotvec_to_matrix(so3.canonicalize_rotvec(x[1:4]))
        t = x[4:]
        return float(np.sum((s * pred @ R.T + t - gt) ** 2))

    x0 = np.concatenate([[s0], so3.matrix_to_rotvec(R0), t0])
    res = minimize(cost, x0 + 1e-3, method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-13, "maxiter": 40000})
    closed_cost = cost(x0)
    assert closed_cost <= res.fun + 1e-8 * max(res.fun, 1.0)


# -- accuracy curve ----------------------------------------------------------


def test_curve_all_zero_errors():
    curve = accuracy_curve(np.zeros(10), np.array([1.0, 2.0, 3.0]))
    assert all(frac == 1.0 for _, frac in curve)


def test_curve_thirds():
    curve = accuracy_curve(np.array([1.0, 3.0, 5.0]), np.array([2.0, 4.0, 6.0]))
    np.testing.assert_allclose([f for _, f in curve], [1 / 3, 2 / 3, 1.0])


def test_curve_monotone_random(rng):
    for _ in range(1000):
        errors = rng.exponential(5.0, size=rng.integers(1, 40))
        th = np.sort(rng.uniform(0, 20, 6))
        fracs = [f for _, f in accuracy_curve(errors, th)]
        assert all(b >= a for a, b in zip(fracs, fracs[1:]))
        assert all(0.0 <= f <= 1.0 for f in fracs)


def test_curve_requires_sorted_thresholds():
    with pytest.raises(ValueError):
        accuracy_curve(np.array([1.0]), np.array([3.0, 2.0]))


# -- control points ----------------------------------------------------------


def test_control_points_identical():
    box = np.random.default_rng(0).uniform(0, 100, (8, 2))
    assert control_point_error(box, box) == 0.0


def test_control_points_three_four_shift():
    box = np.random.default_rng(0).uniform(0, 100, (8, 2))
    assert abs(control_point_error(box + [3.0, 4.0], box) - 5.0) < 1e-12


def test_control_points_anchor(rng):
    """Uniform corner error of 41.56 px reports exactly 41.56."""
    box = rng.uniform(0, 640, (8, 2))
    d = rng.normal(0, 1, (8, 2))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    assert abs(control_point_error(box + 41.56 * d, box) - 41.56) < 1e-9


def test_control_points_shape():
    with pytest.raises(ValueError):
        control_point_error(np.zeros((7, 2)), np.zeros((8, 2)))


def test_bounding_box_corners():
    v = np.array([[0.0, 0, 0], [2, 1, 3], [1, 0.5, 2]])
    corners = bounding_box_corners(v)
    assert corners.shape == (8, 3)
    assert {tuple(c) for c in corners} == {
        (x, y, z) for x in (0.0, 2.0) for y in (0.0, 1.0) for z in (0.0, 3.0)}


def test_report_table_has_columns():
    rep = MetricReport(1.0, 2.0, None, 3.0, None)
    table = rep.table()
    for col in ("P2d", "MPJPE", "PVE", "PA-MPJPE", "PA-PVE"):
        assert col in table
