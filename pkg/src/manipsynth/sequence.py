"""Per-frame manipulation sequences from curated grasp templates.

A sequence alternates hold phases (a key pose repeated for a sampled
number of frames) with transitions (5 to 30 interpolated frames between
consecutive key poses). Interpolated poses are re-refined with the
keypoint reference set to the interpolated keypoints, so transitions stay
plausible without drifting from the path. Everything is driven by one
seeded generator: same seed, same sequence, byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3
from .geometry import RigidTransform, TriMesh
from .grasp import (FilterThresholds, GraspCandidate, GraspObjective,
                    LossWeights, RefineConfig, refine_grasp, score_candidate)
from .hand import HandModel, HandPose, keypoints


@dataclass
class SequenceSpec:
    key_pose_count: int = 30
    hold_range: tuple[int, int] = (10, 30)
    transition_range: tuple[int, int] = (5, 30)
    rng_seed: int = 0
    object_class: str = "other"
    sigma_rot: float = 0.05      # radians, key-pose resampling
    sigma_trans: float = 0.005   # meters

    def __post_init__(self):
        lo, hi = self.transition_range
        if not (5 <= lo <= hi <= 30):
            raise ValueError("transition range must lie within [5, 30]")
        if not (1 <= self.hold_range[0] <= self.hold_range[1]):
            raise ValueError("hold range must be nonempty and positive")
        if self.key_pose_count < 1:
            raise ValueError("need at least one key pose")


@dataclass
class SequenceFrame:
    hand_pose: HandPose
    phase: str                    # "hold" | "transition"
    key_pose_index: int
    object_transform: RigidTransform | None = None


@dataclass
class ManipulationSequence:
    frames: list[SequenceFrame] = field(default_factory=list)

    def __len__(self):
        return len(self.frames)


class KeyPoseBudgetError(RuntimeError):
    def __init__(self, accepted, attempts):
        self.accepted = accepted
        self.attempts = attempts
        super().__init__(
            f"key-pose resampling budget exhausted: {accepted} accepted in "
            f"{attempts} attempts (pass rate {accepted / max(attempts, 1):.1%})")


def sample_key_poses(template: GraspCandidate, spec: SequenceSpec,
                     model: HandModel,
                     thresholds: FilterThresholds | None = None,
                     refine_config: RefineConfig | None = None,
                     rng: np.random.Generator | None = None) -> list[HandPose]:
    """Resample filter-passing key poses around a curated template.

    Each draw perturbs the template, refines it against the object, and
    keeps it only if it passes the candidate filters. Gives up after
    10x the requested count of attempts.
    """
    if template.status != "template":
        raise ValueError(f"candidate {template.candidate_id} is not curated as a template")
    from .hand import perturb_pose

    if rng is None:
        rng = np.random.default_rng(spec.rng_seed)
    th = thresholds or FilterThresholds()
    if spec.sigma_rot == 0.0 and spec.sigma_trans == 0.0:
        # zero-width resampling: the curated template is already refined
        return [template.hand_pose.copy() for _ in range(spec.key_pose_count)]

    weights = LossWeights.for_class(template.object_class)
    ref_kp = keypoints(model, template.hand_pose)
    objective = GraspObjective(model, template.object_mesh, ref_kp, weights)
    poses: list[HandPose] = []
    budget = 10 * spec.key_pose_count
    attempts = 0
    while len(poses) < spec.key_pose_count:
        if attempts >= budget:
            raise KeyPoseBudgetError(len(poses), attempts)
        attempts += 1
        cand = perturb_pose(template.hand_pose, spec.sigma_rot, spec.sigma_trans, rng)
        refined, _ = refine_grasp(model, cand, template.object_mesh, ref_kp,
                                  weights, refine_config, objective=objective)
        scores = score_candidate(model, refined, template.object_mesh, th)
        if (scores["penetrationVolumeCm3"] <= th.max_penetration_cm3
                and scores["contactVertexCount"] >= th.min_contact_vertices):
            poses.append(refined)
    return poses


def interpolate(a: HandPose, b: HandPose, t: float) -> HandPose:
    """Pose interpolation: geodesic (slerp) per rotation, linear translation."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("interpolation parameter must lie in [0, 1]")
    if t == 0.0:
        return a.copy()
    if t == 1.0:
        return b.copy()
    gr = so3.slerp_rotvec(a.global_rotation, b.global_rotation, t)
    gt = (1.0 - t) * a.global_translation + t * b.global_translation
    jr = np.stack([so3.slerp_rotvec(ra, rb, t)
                   for ra, rb in zip(a.joint_rotations, b.joint_rotations)]) \
        if len(a.joint_rotations) else a.joint_rotations.copy()
    return HandPose(so3.canonicalize_rotvec(gr), gt,
                    np.stack([so3.canonicalize_rotvec(r) for r in jr]) if len(jr) else jr)


def build_sequence(key_poses: list[HandPose], spec: SequenceSpec,
                   model: HandModel, object_mesh: TriMesh,
                   refine_transitions: bool = True,
                   transition_refine_iters: int = 50,
                   rng: np.random.Generator | None = None) -> ManipulationSequence:
    """Hold each key pose, then transition to the next with refined
    interpolants; total frames = sum of holds + sum of transitions."""
    if not key_poses:
        raise ValueError("need at least one key pose")
    if rng is None:
        rng = np.random.default_rng(spec.rng_seed + 1)
    weights = LossWeights.for_class(spec.object_class)
    cfg = RefineConfig(max_iters=transition_refine_iters)

    frames: list[SequenceFrame] = []
    kp_cache = [keypoints(model, p) for p in key_poses]
    for k, pose in enumerate(key_poses):
        hold = int(rng.integers(spec.hold_range[0], spec.hold_range[1] + 1))
        for _ in range(hold):
            frames.append(SequenceFrame(pose.copy(), "hold", k))
        if k + 1 >= len(key_poses):
            continue
        nxt = key_poses[k + 1]
        L = int(rng.integers(spec.transition_range[0], spec.transition_range[1] + 1))
        for i in range(1, L + 1):
            t = i / (L + 1)
            interp = interpolate(pose, nxt, t)
            if refine_transitions:
                ref = (1.0 - t) * kp_cache[k] + t * kp_cache[k + 1]
                interp, _ = refine_grasp(model, interp, object_mesh, ref,
                                         weights, cfg)
            frames.append(SequenceFrame(interp, "transition", k))
    return ManipulationSequence(frames)


def attach_object(sequence: ManipulationSequence,
                  grasp_object_transform: RigidTransform) -> ManipulationSequence:
    """Rigidly carry the object with the hand root frame.

    grasp_object_transform places the object relative to the hand's global
    frame (for candidates refined with the object at the origin this is
    the inverse of the hand's grasp-frame global motion).
    """
    for frame in sequence.frames:
        hand_frame = RigidTransform(
            so3.rotvec_to_matrix(frame.hand_pose.global_rotation),
            frame.hand_pose.global_translation)
        frame.object_transform = hand_frame.compose(grasp_object_transform)
    return sequence
