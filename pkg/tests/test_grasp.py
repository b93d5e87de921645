import numpy as np
import pytest
from scipy.spatial import cKDTree

from manipsynth.geometry import (OpenMeshError, SpatialIndex, TriMesh,
                                 brute_force_closest_point, classify_inside)
from manipsynth.grasp import (FilterThresholds, GraspCandidate, GraspObjective,
                              LossWeights, RefineConfig, filter_candidates,
                              loss_contact, loss_keypoint, loss_penetration,
                              refine_grasp, score_candidate, total_loss)
from manipsynth.hand import HandPose, keypoints, perturb_pose, pose_hand
from manipsynth.primitives import make_box, make_capped_cylinder, make_icosphere


# -- loss_penetration --------------------------------------------------------


def test_penetration_disjoint_zero():
    hand = make_box(center=(0, 0, 0), size=(0.1, 0.1, 0.1))
    obj = make_box(center=(1, 0, 0), size=(0.1, 0.1, 0.1))
    assert loss_penetration(hand, obj) == 0.0


def test_penetration_single_vertex_three_mm():
    hand = make_icosphere(0.05, 2)
    u = hand.vertices[0] / np.linalg.norm(hand.vertices[0])
    p_in = 0.047 * u                       # 3 mm inside, radially under vertex 0
    t1 = 0.06 * u + np.array([0.001, 0, 0])
    t2 = 0.06 * u + np.array([0, 0.001, 0])
    obj = TriMesh(np.stack([p_in, t1, t2]), np.array([[0, 1, 2]]))
    val = loss_penetration(hand, obj)
    assert abs(val - 9e-6) < 1e-9


def test_penetration_matches_double_loop(rng):
    hand = make_icosphere(0.06, 2)
    obj = make_icosphere(0.05, 1).transformed(
        __import__("manipsynth").RigidTransform(np.eye(3), np.array([0.05, 0.0, 0.0])))
    val = loss_penetration(hand, obj)
    # O(N*M) oracle: inside test per object vertex, then min over hand vertices
    idx = SpatialIndex(hand)
    inside = classify_inside(idx, obj.vertices)
    assert inside.any()
    terms = []
    for p in obj.vertices[inside]:
        terms.append(np.min(np.sum((hand.vertices - p) ** 2, axis=1)))
    assert abs(val - np.mean(terms)) < 1e-15


def test_penetration_requires_closed_hand():
    open_mesh = TriMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                        np.array([[0, 1, 2]])).with_normals()
    with pytest.raises(OpenMeshError):
        loss_penetration(open_mesh, make_box())


def test_penetration_zero_iff_nothing_inside(rng):
    hand = make_icosphere(0.05, 2)
    obj = make_box(center=(0.2, 0, 0), size=(0.05, 0.05, 0.05))
    assert not classify_inside(SpatialIndex(hand), obj.vertices).any()
    assert loss_penetration(hand, obj) == 0.0


# -- loss_contact ------------------------------------------------------------


def test_contact_vertex_on_surface_zero():
    obj = make_box()
    hand = TriMesh(np.array([[0.5, 0.0, 0.0], [0.6, 0, 0], [0.6, 0.1, 0]]),
                   np.array([[0, 1, 2]]))
    val = loss_contact(hand, obj, hand_mask=np.array([0]))
    assert val < 1e-18


def test_contact_unit_distance():
    obj = make_box()
    hand = TriMesh(np.array([[1.5, 0.0, 0.0], [1.6, 0, 0], [1.6, 0.1, 0]]),
                   np.array([[0, 1, 2]]))
    assert abs(loss_contact(hand, obj, hand_mask=np.array([0])) - 1.0) < 1e-12


def test_contact_empty_mask_error():
    with pytest.raises(ValueError):
        loss_contact(make_box(), make_box(), hand_mask=np.array([], dtype=int))


def test_contact_matches_double_loop(rng):
    obj = make_icosphere(0.04, 1)
    hand = make_box(center=(0.05, 0.01, 0.0), size=(0.06, 0.05, 0.04))
    mask = np.arange(len(hand.vertices))
    val = loss_contact(hand, obj, hand_mask=mask)
    oracle = sum(brute_force_closest_point(obj, v)[1] ** 2 for v in hand.vertices)
    assert abs(val - oracle) < 1e-12


def test_contact_literal_reading_matches_double_loop(rng):
    obj = make_icosphere(0.04, 1)
    hand = make_box(center=(0.05, 0.01, 0.0), size=(0.06, 0.05, 0.04))
    val = loss_contact(hand, obj, literal_object_sum=True)
    oracle = sum(np.min(np.sum((hand.vertices - p) ** 2, axis=1))
                 for p in obj.vertices)
    assert abs(val - oracle) < 1e-12


# -- loss_keypoint -----------------------------------------------------------


def test_keypoint_zero():
    k = np.zeros((21, 3))
    assert loss_keypoint(k, k) == 0.0


def test_keypoint_single_offset():
    a = np.zeros((21, 3))
    b = a.copy()
    b[7] = [0.003, 0.004, 0.0]
    assert abs(loss_keypoint(b, a) - 2.5e-5) < 1e-18


def test_keypoint_all_offset_one_mm():
    a = np.zeros((21, 3))
    b = a + [0.001, 0.0, 0.0]
    assert abs(loss_keypoint(b, a) - 2.1e-5) < 1e-18


def test_keypoint_shape_mismatch():
    with pytest.raises(ValueError):
        loss_keypoint(np.zeros((20, 3)), np.zeros((21, 3)))


# -- total_loss --------------------------------------------------------------


@pytest.fixture(scope="module")
def cylinder():
    return make_capped_cylinder(radius=0.008, length=0.15, radial=10, rings=6, axis=0)


def test_total_loss_keypoint_only(toy_model, toy_template_pose, cylinder):
    ref = keypoints(toy_model, toy_template_pose)
    w = LossWeights(0.0, 0.0, 1.0)
    assert total_loss(toy_model, toy_template_pose, cylinder, ref, w) == 0.0


def test_total_loss_disjoint_penetration_zero(toy_model, cylinder):
    pose = HandPose.identity(toy_model.num_joints)
    pose.global_translation = np.array([0.0, 0.5, 0.0])
    ref = keypoints(toy_model, pose)
    w = LossWeights(1.0, 0.0, 0.0)
    assert total_loss(toy_model, pose, cylinder, ref, w) == 0.0


def test_total_loss_is_sum_of_terms(toy_model, toy_template_pose, cylinder, rng):
    pose = perturb_pose(toy_template_pose, 0.1, 0.01, rng)
    ref = keypoints(toy_model, toy_template_pose)
    hand = pose_hand(toy_model, pose)
    lp = loss_penetration(hand, cylinder)
    lc = loss_contact(hand, cylinder, hand_mask=toy_model.default_contact_mask())
    lk = loss_keypoint(keypoints(toy_model, pose), ref)
    w = LossWeights(1.0, 1.0, 1.0)
    assert abs(total_loss(toy_model, pose, cylinder, ref, w) - (lp + lc + lk)) < 1e-12


def test_total_loss_linear_in_each_weight(toy_model, toy_template_pose, cylinder, rng):
    pose = perturb_pose(toy_template_pose, 0.1, 0.01, rng)
    ref = keypoints(toy_model, toy_template_pose)
    base = [total_loss(toy_model, pose, cylinder, ref, w) for w in
            (LossWeights(1, 0, 0), LossWeights(0, 1, 0), LossWeights(0, 0, 1))]
    for a, b, g in [(2.5, 0.3, 1.7), (0.1, 4.0, 0.0)]:
        v = total_loss(toy_model, pose, cylinder, ref, LossWeights(a, b, g))
        assert abs(v - (a * base[0] + b * base[1] + g * base[2])) < 1e-12 * max(1.0, v)


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(-1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        LossWeights(0.0, 0.0, 0.0)
    assert LossWeights.for_class("scalpel").alpha == 0.5
    assert LossWeights.for_class("friem").alpha == 1.0


# -- gradients ---------------------------------------------------------------


def test_gradient_matches_finite_differences(toy_model, toy_template_pose, cylinder):
    rng = np.random.default_rng(42)
    ref = keypoints(toy_model, toy_template_pose)
    objective = GraspObjective(toy_model, cylinder, ref, LossWeights(1.0, 1.0, 1.0))
    checked = 0
    for _ in range(20):
        pose = perturb_pose(toy_template_pose, 0.08, 0.008, rng)
        x = pose.as_vector()
        _, g = objective.value_and_grad(x)
        fd = objective.fd_gradient(x)
        scale = max(np.linalg.norm(fd), 1e-12)
        assert np.linalg.norm(g - fd) / scale < 1e-3
        checked += 1
    assert checked == 20


def test_per_term_gradients(toy_model, toy_template_pose, cylinder, rng):
    ref = keypoints(toy_model, toy_template_pose)
    pose = perturb_pose(toy_template_pose, 0.05, 0.005, rng)
    x = pose.as_vector()
    for w in (LossWeights(1, 0, 0), LossWeights(0, 1, 0), LossWeights(0, 0, 1)):
        objective = GraspObjective(toy_model, cylinder, ref, w)
        _, g = objective.value_and_grad(x)
        fd = objective.fd_gradient(x)
        assert np.linalg.norm(g - fd) <= 1e-3 * max(np.linalg.norm(fd), 1e-9)


# -- refine_grasp ------------------------------------------------------------


def test_refine_at_zero_loss_returns_init(toy_model, toy_template_pose, cylinder):
    ref = keypoints(toy_model, toy_template_pose)
    w = LossWeights(0.0, 0.0, 1.0)
    refined, trace = refine_grasp(toy_model, toy_template_pose, cylinder, ref, w)
    assert len(trace) == 1 and trace[0] == 0.0
    np.testing.assert_array_equal(refined.as_vector(), toy_template_pose.as_vector())


def test_refine_descends(toy_model, toy_template_pose, cylinder, rng):
    ref = keypoints(toy_model, toy_template_pose)
    w = LossWeights(1.0, 1.0, 1.0)
    init = perturb_pose(toy_template_pose, 0.15, 0.015, rng)
    refined, trace = refine_grasp(toy_model, init, cylinder, ref, w,
                                  RefineConfig(max_iters=60))
    assert all(b <= a + 1e-15 for a, b in zip(trace, trace[1:]))
    assert trace[-1] < trace[0]


def test_refine_penetration_strictly_reduced(toy_model, cylinder):
    pose = HandPose.identity(toy_model.num_joints)
    pose.global_translation = np.array([0.0, 0.0, -0.01])   # palm sunk into tool
    ref = keypoints(toy_model, pose)
    w = LossWeights(1.0, 0.0, 0.0)
    refined, trace = refine_grasp(toy_model, pose, cylinder, ref, w,
                                  RefineConfig(max_iters=40))
    assert trace[0] > 0
    assert trace[-1] < trace[0]


def test_refine_weight_scale_invariance(toy_model, toy_template_pose, cylinder, rng):
    ref = keypoints(toy_model, toy_template_pose)
    init = perturb_pose(toy_template_pose, 0.1, 0.01, rng)
    cfg = RefineConfig(max_iters=25)
    a, trace_a = refine_grasp(toy_model, init, cylinder, ref,
                              LossWeights(1.0, 1.0, 1.0), cfg)
    b, trace_b = refine_grasp(toy_model, init, cylinder, ref,
                              LossWeights(3.0, 3.0, 3.0), cfg)
    # identical up to floating-point roundoff in the scaled arithmetic
    np.testing.assert_allclose(a.as_vector(), b.as_vector(), atol=1e-10)
    np.testing.assert_allclose(np.array(trace_b), 3.0 * np.array(trace_a), rtol=1e-9)


def test_refine_multi_restart_near_best(toy_model, toy_template_pose, cylinder):
    """The default refinement lands within 1% of the best loss found by a
    20-random-restart oracle with the same per-run budget."""
    rng = np.random.default_rng(11)
    ref = keypoints(toy_model, toy_template_pose)
    w = LossWeights(1.0, 1.0, 0.1)
    cfg = RefineConfig(max_iters=150)
    objective = GraspObjective(toy_model, cylinder, ref, w)
    _, trace = refine_grasp(toy_model, toy_template_pose, cylinder, ref, w,
                            cfg, objective=objective)
    restarts = []
    for _ in range(20):
        other = perturb_pose(toy_template_pose, 0.05, 0.005, rng)
        _, tr = refine_grasp(toy_model, other, cylinder, ref, w, cfg,
                             objective=objective)
        restarts.append(tr[-1])
    assert trace[-1] <= min(restarts) * 1.01 + 1e-12


# -- filtering ---------------------------------------------------------------


def test_filter_disjoint_rejected(toy_model, cylinder):
    pose = HandPose.identity(toy_model.num_joints)
    pose.global_translation = np.array([0.0, 0.5, 0.0])
    cand = GraspCandidate("c0", "other", pose, cylinder)
    accepted, rejected = filter_candidates([cand], toy_model)
    assert not accepted and rejected[0].status == "rejected"
    assert rejected[0].scores["contactVertexCount"] == 0


def test_filter_fully_interpenetrating_rejected(toy_model):
    big = make_box(center=(0, 0, 0.02), size=(0.3, 0.3, 0.3))
    pose = HandPose.identity(toy_model.num_joints)
    cand = GraspCandidate("c1", "other", pose, big)
    accepted, rejected = filter_candidates([cand], toy_model)
    assert not accepted
    assert rejected[0].scores["penetrationVolumeCm3"] > 4.0


def test_filter_template_accepted(toy_model, toy_template_pose, diskplacer):
    cand = GraspCandidate("c2", "diskplacer", toy_template_pose, diskplacer)
    accepted, _ = filter_candidates([cand], toy_model)
    assert accepted and accepted[0].status == "accepted"


def test_scores_reproducible(toy_model, toy_template_pose, diskplacer):
    s1 = score_candidate(toy_model, toy_template_pose, diskplacer)
    s2 = score_candidate(toy_model, toy_template_pose, diskplacer)
    assert s1 == s2
