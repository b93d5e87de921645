"""
Key poses, holds, and transitions
=================================

Samples filter-passing key poses around the template grasp and assembles a
hold/transition sequence with the object rigidly attached.
"""

import numpy as np

from manipsynth import (GraspCandidate, RigidTransform, SequenceSpec, so3,
                        attach_object, build_sequence, sample_key_poses)
from manipsynth.assets import load_template_pose, load_tool, load_toy_hand

rng = np.random.default_rng(5)
model = load_toy_hand()
tool = load_tool("diskplacer")
template = GraspCandidate("template", "diskplacer",
                          load_template_pose("toy"), tool, status="template")

spec = SequenceSpec(key_pose_count=3, hold_range=(4, 8),
                    transition_range=(5, 12), sigma_rot=0.02, sigma_trans=0.002)
keys = sample_key_poses(template, spec, model, rng=rng)
print(f"accepted {len(keys)} key poses")

seq = build_sequence(keys, spec, model, tool, transition_refine_iters=10, rng=rng)
phases = [f.phase for f in seq.frames]
print(f"{len(seq)} frames: {phases.count('hold')} hold, "
      f"{phases.count('transition')} transition")

# carry the tool with the hand root frame
hand0 = template.hand_pose
grasp_offset = RigidTransform(
    so3.rotvec_to_matrix(hand0.global_rotation), hand0.global_translation).inverse()
attach_object(seq, grasp_offset)
travel = [np.linalg.norm(f.object_transform.translation) for f in seq.frames]
print(f"object translation magnitude over the sequence: "
      f"min {min(travel):.4f} m, max {max(travel):.4f} m")
