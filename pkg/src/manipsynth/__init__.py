"""manipsynth: synthesis of hand-tool manipulation sequences with full
3D/2D pose annotations.

Core layers: mesh geometry and proximity queries, a skinned hand model
with analytic pose Jacobians, grasp refinement and filtering, key-pose
sequence assembly, body fusion with egocentric camera derivation,
multi-view skeleton geometry, evaluation metrics, and an end-to-end
pipeline with a local curation service.
"""

from .geometry import (EmptyGeometryError, MeshError, OpenMeshError,
                       RigidTransform, SpatialIndex, TriMesh, classify_inside,
                       load_mesh, mesh_to_obj_string, penetration_volume,
                       save_mesh)
from .hand import (HandModel, HandModelError, HandPose, NUM_KEYPOINTS,
                   keypoints, load_hand_model, perturb_pose, pose_hand,
                   pose_jacobians, pose_vertices, save_hand_model)
from .grasp import (FilterThresholds, GraspCandidate, GraspObjective,
                    LossWeights, RefineConfig, filter_candidates,
                    loss_contact, loss_keypoint, loss_penetration,
                    refine_grasp, score_candidate, total_loss)
from .sequence import (KeyPoseBudgetError, ManipulationSequence,
                       SequenceFrame, SequenceSpec, attach_object,
                       build_sequence, interpolate, sample_key_poses)
from .fusion import (BodyFrame, CameraIntrinsics, CameraPose, FuseConfig,
                     FuseResult, UnderdeterminedError, apply_to_object,
                     camera_from_head, fuse_frame, smooth_trajectory)
from .mocap import (Camera, CameraRig, DEFAULT_CONFIDENCE_THRESHOLD,
                    Observation2D, TriangulationError,
                    regularize_bone_lengths, temporal_smooth, triangulate)
from .metrics import (MetricReport, PoseEstimate, accuracy_curve,
                      bounding_box_corners, control_point_error, mpjpe,
                      pa_metric, procrustes_align, project_points, pve,
                      reprojection_error)
from .pipeline import (ConfigError, PipelineConfig, cmd_evaluate,
                       cmd_generate, cmd_synthesize, load_body_sequence,
                       save_body_sequence)
from .store import CandidateStore, StoreError, StoreLockedError, UnknownCandidateError

__version__ = "0.1.0"

__all__ = [
    "EmptyGeometryError", "MeshError", "OpenMeshError", "RigidTransform",
    "SpatialIndex", "TriMesh", "classify_inside", "load_mesh",
    "mesh_to_obj_string", "penetration_volume", "save_mesh",
    "HandModel", "HandModelError", "HandPose", "NUM_KEYPOINTS", "keypoints",
    "load_hand_model", "perturb_pose", "pose_hand", "pose_jacobians",
    "pose_vertices", "save_hand_model",
    "FilterThresholds", "GraspCandidate", "GraspObjective", "LossWeights",
    "RefineConfig", "filter_candidates", "loss_contact", "loss_keypoint",
    "loss_penetration", "refine_grasp", "score_candidate", "total_loss",
    "KeyPoseBudgetError", "ManipulationSequence", "SequenceFrame",
    "SequenceSpec", "attach_object", "build_sequence", "interpolate",
    "sample_key_poses",
    "BodyFrame", "CameraIntrinsics", "CameraPose", "FuseConfig", "FuseResult",
    "UnderdeterminedError", "apply_to_object", "camera_from_head",
    "fuse_frame", "smooth_trajectory",
    "Camera", "CameraRig", "DEFAULT_CONFIDENCE_THRESHOLD", "Observation2D",
    "TriangulationError", "regularize_bone_lengths", "temporal_smooth",
    "triangulate",
    "MetricReport", "PoseEstimate", "accuracy_curve", "bounding_box_corners",
    "control_point_error", "mpjpe", "pa_metric", "procrustes_align",
    "project_points", "pve", "reprojection_error",
    "ConfigError", "PipelineConfig", "cmd_evaluate", "cmd_generate",
    "cmd_synthesize", "load_body_sequence", "save_body_sequence",
    "CandidateStore", "StoreError", "StoreLockedError", "UnknownCandidateError",
]
