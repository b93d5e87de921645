"""End-to-end orchestration: candidate generation, sequence synthesis with
body fusion and camera derivation, annotation export, and evaluation.

All stages are deterministic given the config (including its RNG seed);
every output document records the hash of the config that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileio, so3
from .fusion import (BodyFrame, CameraIntrinsics, FuseConfig, camera_from_head,
                     fuse_frame, smooth_trajectory)
from .geometry import RigidTransform, TriMesh, load_mesh, save_mesh
from .grasp import (FilterThresholds, LossWeights, RefineConfig,
                    refine_grasp, score_candidate, GraspObjective, GraspCandidate)
from .hand import HandModel, HandPose, keypoints, load_hand_model, perturb_pose, pose_vertices
from .metrics import (MetricReport, accuracy_curve, bounding_box_corners,
                      control_point_error, mpjpe, pa_metric, project_points,
                      pve, reprojection_error)
from .sequence import ManipulationSequence, SequenceSpec, attach_object, build_sequence, sample_key_poses
from .store import CandidateStore

CONFIG_FORMAT = "pipeline-config/1"
BODY_SEQUENCE_FORMAT = "body-sequence/1"
ANNOTATION_FORMAT = "frame-annotation/1"
MANIFEST_FORMAT = "manifest/1"
SEQUENCE_FORMAT = "manipulation-sequence/1"
ESTIMATES_FORMAT = "pose-estimates/1"
CAMERA_FORMAT = "camera-pose/1"
REPORT_FORMAT = "metric-report/1"


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid pipeline config:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass
class PipelineConfig:
    object_class: str
    hand_model_path: str
    object_mesh_path: str
    initial_pose_path: str
    body_sequence_path: str | None = None
    loss_weights: LossWeights | None = None
    sigma_rot: float = 0.05
    sigma_trans: float = 0.005
    sample_budget: int = 500
    key_pose_count: int = 30
    hold_range: tuple[int, int] = (10, 30)
    transition_range: tuple[int, int] = (5, 30)
    camera_offset: RigidTransform | None = None
    smoothing_window: int = 9
    smoothing_outlier_k: float = 3.0
    intrinsics: CameraIntrinsics = field(
        default_factory=lambda: CameraIntrinsics(600.0, 600.0, 640.0, 360.0, 1280, 720))
    rng_seed: int = 0
    output_dir: str = "out"
    refine_iters: int = 200
    transition_refine_iters: int = 50

    def payload(self) -> dict:
        w = self.loss_weights or LossWeights.for_class(self.object_class)
        return {
            "objectClass": self.object_class,
            "handModelPath": str(self.hand_model_path),
            "objectMeshPath": str(self.object_mesh_path),
            "initialPosePath": str(self.initial_pose_path),
            "bodySequencePath": str(self.body_sequence_path) if self.body_sequence_path else None,
            "lossWeights": {"alpha": w.alpha, "beta": w.beta, "gamma": w.gamma},
            "samplerSigmaRot": self.sigma_rot,
            "samplerSigmaTrans": self.sigma_trans,
            "sampleBudget": self.sample_budget,
            "sequence": {"keyPoseCount": self.key_pose_count,
                         "holdRange": list(self.hold_range),
                         "transitionRange": list(self.transition_range)},
            "cameraOffset": (fileio.transform_payload(self.camera_offset)
                             if self.camera_offset else None),
            "smoothing": {"window": self.smoothing_window,
                          "outlierK": self.smoothing_outlier_k},
            "intrinsics": {"fx": self.intrinsics.fx, "fy": self.intrinsics.fy,
                           "cx": self.intrinsics.cx, "cy": self.intrinsics.cy,
                           "width": self.intrinsics.width,
                           "height": self.intrinsics.height},
            "rngSeed": self.rng_seed,
            "outputDir": str(self.output_dir),
            "refineIters": self.refine_iters,
            "transitionRefineIters": self.transition_refine_iters,
        }

    def hash(self) -> str:
        return fileio.config_hash(self.payload())

    def save(self, path) -> None:
        fileio.write_doc(path, CONFIG_FORMAT, self.payload())

    @staticmethod
    def load(path) -> "PipelineConfig":
        doc = fileio.read_doc(path, CONFIG_FORMAT)
        w = doc.get("lossWeights")
        intr = doc["intrinsics"]
        return PipelineConfig(
            object_class=doc["objectClass"],
            hand_model_path=doc["handModelPath"],
            object_mesh_path=doc["objectMeshPath"],
            initial_pose_path=doc["initialPosePath"],
            body_sequence_path=doc.get("bodySequencePath"),
            loss_weights=LossWeights(w["alpha"], w["beta"], w["gamma"]) if w else None,
            sigma_rot=doc["samplerSigmaRot"],
            sigma_trans=doc["samplerSigmaTrans"],
            sample_budget=doc["sampleBudget"],
            key_pose_count=doc["sequence"]["keyPoseCount"],
            hold_range=tuple(doc["sequence"]["holdRange"]),
            transition_range=tuple(doc["sequence"]["transitionRange"]),
            camera_offset=(fileio.transform_from_payload(doc["cameraOffset"])
                           if doc.get("cameraOffset") else None),
            smoothing_window=doc["smoothing"]["window"],
            smoothing_outlier_k=doc["smoothing"]["outlierK"],
            intrinsics=CameraIntrinsics(intr["fx"], intr["fy"], intr["cx"],
                                        intr["cy"], intr["width"], intr["height"]),
            rng_seed=doc["rngSeed"],
            output_dir=doc["outputDir"],
            refine_iters=doc.get("refineIters", 200),
            transition_refine_iters=doc.get("transitionRefineIters", 50),
        )

    def validate(self, need_body: bool = False) -> None:
        """Collect every problem before failing."""
        problems = []
        for label, p in [("hand model", self.hand_model_path),
                         ("object mesh", self.object_mesh_path),
                         ("initial pose", self.initial_pose_path)]:
            if not Path(p).is_file():
                problems.append(f"{label} file not found: {p}")
        if need_body:
            if not self.body_sequence_path:
                problems.append("body sequence path is required for synthesis")
            elif not Path(self.body_sequence_path).is_file():
                problems.append(f"body sequence file not found: {self.body_sequence_path}")
        if self.object_class not in ("scalpel", "friem", "diskplacer", "other"):
            problems.append(f"unknown object class {self.object_class!r}")
        if self.sample_budget < 1:
            problems.append("sample budget must be >= 1")
        if not (5 <= self.transition_range[0] <= self.transition_range[1] <= 30):
            problems.append("transition range must lie within [5, 30]")
        if self.sigma_rot < 0 or self.sigma_trans < 0:
            problems.append("sampler sigmas must be nonnegative")
        if problems:
            raise ConfigError(problems)


# ---------------------------------------------------------------------------
# body sequence files
# ---------------------------------------------------------------------------


def save_body_sequence(frames: list[BodyFrame], path) -> None:
    vmap = frames[0].vertex_map
    fileio.write_doc(path, BODY_SEQUENCE_FORMAT, {
        "vertexMap": vmap.tolist(),
        "frames": [{
            "bodyHandVertices": f.body_hand_vertices.tolist(),
            "headVertices": f.head_vertices.tolist(),
            "headRotation": f.head_rotation.tolist(),
        } for f in frames],
    })


def load_body_sequence(path) -> list[BodyFrame]:
    doc = fileio.read_doc(path, BODY_SEQUENCE_FORMAT)
    vmap = np.array(doc["vertexMap"], dtype=np.int64)
    return [BodyFrame(np.array(f["bodyHandVertices"], dtype=float),
                      np.array(f["headVertices"], dtype=float),
                      np.array(f["headRotation"], dtype=float),
                      vmap)
            for f in doc["frames"]]


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(config: PipelineConfig, store_dir,
                 thresholds: FilterThresholds | None = None) -> CandidateStore:
    """Sample, refine and score grasp candidates into a fresh store."""
    config.validate()
    model = load_hand_model(config.hand_model_path)
    object_mesh = load_mesh(config.object_mesh_path)
    init_pose = fileio.load_pose(config.initial_pose_path)
    weights = config.loss_weights or LossWeights.for_class(config.object_class)
    th = thresholds or FilterThresholds()
    rng = np.random.default_rng(config.rng_seed)

    store = CandidateStore.create(store_dir, config.object_class, object_mesh,
                                  config_hash=config.hash(), seed=config.rng_seed)
    ref_kp = keypoints(model, init_pose)
    objective = GraspObjective(model, object_mesh, ref_kp, weights)
    cfg = RefineConfig(max_iters=config.refine_iters)
    width = max(4, len(str(config.sample_budget - 1)))
    with store:
        for k in range(config.sample_budget):
            cand = perturb_pose(init_pose, config.sigma_rot, config.sigma_trans, rng)
            refined, _ = refine_grasp(model, cand, object_mesh, ref_kp, weights,
                                      cfg, objective=objective)
            scores = score_candidate(model, refined, object_mesh, th)
            store.add_candidate(f"cand_{k:0{width}d}", refined, scores,
                                status="refined")
    return store


# ---------------------------------------------------------------------------
# synthesize
# ---------------------------------------------------------------------------


def save_sequence(seq: ManipulationSequence, path, config_hash: str = "") -> None:
    fileio.write_doc(path, SEQUENCE_FORMAT, {
        "configHash": config_hash,
        "frames": [{
            "frameIndex": i,
            "phase": f.phase,
            "keyPoseIndex": f.key_pose_index,
            "pose": fileio.pose_payload(f.hand_pose),
            "objectTransform": (fileio.transform_payload(f.object_transform)
                                if f.object_transform else None),
        } for i, f in enumerate(seq.frames)],
    })


def load_sequence(path) -> ManipulationSequence:
    from .sequence import SequenceFrame
    doc = fileio.read_doc(path, SEQUENCE_FORMAT)
    frames = []
    for rec in doc["frames"]:
        frames.append(SequenceFrame(
            fileio.pose_from_payload(rec["pose"]), rec["phase"],
            rec["keyPoseIndex"],
            (fileio.transform_from_payload(rec["objectTransform"])
             if rec.get("objectTransform") else None)))
    return ManipulationSequence(frames)


def _hand_frame(pose: HandPose) -> RigidTransform:
    return RigidTransform(so3.rotvec_to_matrix(pose.global_rotation),
                          pose.global_translation)


def cmd_synthesize(config: PipelineConfig, store_dir, out_dir,
                   export_frame_objs: bool = True) -> dict:
    """Full synthesis: key poses from curated templates, sequence assembly,
    per-frame body fusion, camera derivation and smoothing, and annotation
    export. Returns the manifest payload."""
    config.validate(need_body=True)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = load_hand_model(config.hand_model_path)
    store = CandidateStore(Path(store_dir))
    object_mesh = store.object_mesh()
    body_frames = load_body_sequence(config.body_sequence_path)
    chash = config.hash()

    template_ids = store.templates()
    if not template_ids:
        raise RuntimeError(f"no curated templates in store {store_dir}")

    spec = SequenceSpec(
        key_pose_count=config.key_pose_count, hold_range=config.hold_range,
        transition_range=config.transition_range, rng_seed=config.rng_seed,
        object_class=config.object_class, sigma_rot=config.sigma_rot,
        sigma_trans=config.sigma_trans)

    manifest_sequences = []
    total_frames = 0
    per_class = {}
    for seq_idx, tid in enumerate(template_ids):
        template = GraspCandidate(
            candidate_id=tid, object_class=config.object_class,
            hand_pose=store.get_pose(tid), object_mesh=object_mesh,
            status="template")
        rng = np.random.default_rng([config.rng_seed, seq_idx])
        key_poses = sample_key_poses(template, spec, model, rng=rng)
        seq = build_sequence(key_poses, spec, model, object_mesh,
                             transition_refine_iters=config.transition_refine_iters,
                             rng=rng)
        grasp_offset = _hand_frame(template.hand_pose).inverse()
        attach_object(seq, grasp_offset)

        seq_dir = out / f"seq_{seq_idx:03d}"
        seq_dir.mkdir(exist_ok=True)
        save_sequence(seq, seq_dir / "sequence.json", chash)

        # fuse every frame into the body stream, derive + smooth the camera
        fuse_cfg = FuseConfig()
        extrinsics = []
        fused = []
        for f_idx, frame in enumerate(seq.frames):
            body = body_frames[f_idx % len(body_frames)]
            result = fuse_frame(body, model, frame.hand_pose, fuse_cfg)
            fused.append((frame, body, result))
            extrinsics.append(camera_from_head(body.head_vertices,
                                               body.head_rotation,
                                               config.camera_offset))
        extrinsics = smooth_trajectory(extrinsics, config.smoothing_window,
                                       config.smoothing_outlier_k)

        corners_canonical = bounding_box_corners(object_mesh.vertices)
        gt_frames = []
        for f_idx, ((frame, body, result), cam) in enumerate(zip(fused, extrinsics)):
            world_motion = RigidTransform(result.rotation, result.translation)
            hand_world = pose_vertices(model, frame.hand_pose)
            hand_world = world_motion.apply(hand_world)
            kp_world = world_motion.apply(keypoints(model, frame.hand_pose))
            obj_world = world_motion.compose(frame.object_transform)

            kp_cam = cam.apply(kp_world)
            joints2d = project_points(kp_cam, config.intrinsics)
            corners_world = obj_world.apply(corners_canonical)
            corners_cam = cam.apply(corners_world)
            control2d = project_points(corners_cam, config.intrinsics)
            obj_cam = cam.compose(obj_world)

            ann = {
                "frameIndex": f_idx,
                "configHash": chash,
                "phase": frame.phase,
                "handJoints3dMm": (kp_cam * 1000.0).tolist(),
                "handJoints2dPx": joints2d.tolist(),
                "objectPoseCamera": fileio.transform_payload(obj_cam),
                "controlPoints2dPx": control2d.tolist(),
                "cameraExtrinsic": fileio.transform_payload(cam),
                "intrinsics": config.payload()["intrinsics"],
                "fusionResidualRmsM": result.residual_rms,
            }
            fileio.write_doc(seq_dir / f"frame_{f_idx:05d}.json",
                             ANNOTATION_FORMAT, ann)
            gt_frames.append({
                "frameIndex": f_idx,
                "joints3d": (kp_cam * 1000.0).tolist(),
                "vertices3d": (cam.apply(hand_world) * 1000.0).tolist(),
                "controlPoints2d": control2d.tolist(),
            })
            if export_frame_objs:
                save_mesh(TriMesh(hand_world, model.faces),
                          seq_dir / f"frame_{f_idx:05d}_hand.obj")
                fileio.write_doc(seq_dir / f"frame_{f_idx:05d}_camera.json",
                                 CAMERA_FORMAT, {
                                     "extrinsic": fileio.transform_payload(cam),
                                     "intrinsics": config.payload()["intrinsics"],
                                     "objectPoseWorld": fileio.transform_payload(obj_world),
                                 })

        fileio.write_doc(seq_dir / "ground_truth.json", ESTIMATES_FORMAT,
                         {"configHash": chash, "frames": gt_frames})
        n = len(seq.frames)
        total_frames += n
        per_class[config.object_class] = per_class.get(config.object_class, 0) + n
        manifest_sequences.append({"sequence": seq_idx, "template": tid,
                                   "frames": n})

    manifest = {
        "configHash": chash,
        "seed": config.rng_seed,
        "sequences": manifest_sequences,
        "perClassFrameCounts": per_class,
        "totalFrames": total_frames,
    }
    fileio.write_doc(out / "manifest.json", MANIFEST_FORMAT, manifest)
    return manifest


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

DEFAULT_THRESHOLDS_PX = [float(t) for t in range(0, 55, 5)]


def cmd_evaluate(predictions_path, ground_truth_path,
                 intrinsics: CameraIntrinsics,
                 thresholds_px: list[float] | None = None) -> MetricReport:
    """Compare two pose-estimate files frame by frame."""
    pred_doc = fileio.read_doc(predictions_path, ESTIMATES_FORMAT)
    gt_doc = fileio.read_doc(ground_truth_path, ESTIMATES_FORMAT)
    pred_by_idx = {f["frameIndex"]: f for f in pred_doc["frames"]}
    gt_by_idx = {f["frameIndex"]: f for f in gt_doc["frames"]}
    common = sorted(set(pred_by_idx) & set(gt_by_idx))
    if not common:
        raise ValueError("no common frame indices between prediction and ground truth")
    coverage = len(common) / len(gt_by_idx)

    p2d_frames, mpjpe_frames, pa_frames = [], [], []
    pve_frames, pa_pve_frames, ctrl_frames = [], [], []
    excluded = 0
    for idx in common:
        p = pred_by_idx[idx]
        g = gt_by_idx[idx]
        pj = np.array(p["joints3d"], dtype=float)
        gj = np.array(g["joints3d"], dtype=float)
        # joints are stored in mm; reproject in meters
        gt2d = project_points(gj / 1000.0, intrinsics)
        err, exc = reprojection_error(pj / 1000.0, gt2d, intrinsics)
        excluded += exc
        p2d_frames.append(err)
        mpjpe_frames.append(mpjpe(pj, gj))
        pa_frames.append(pa_metric(pj, gj))
        if p.get("vertices3d") is not None and g.get("vertices3d") is not None:
            pv = np.array(p["vertices3d"], dtype=float)
            gv = np.array(g["vertices3d"], dtype=float)
            pve_frames.append(pve(pv, gv, root=pj[0], gt_root=gj[0]))
            pa_pve_frames.append(pa_metric(pv, gv))
        if p.get("controlPoints2d") is not None and g.get("controlPoints2d") is not None:
            ctrl_frames.append(control_point_error(
                np.array(p["controlPoints2d"], dtype=float),
                np.array(g["controlPoints2d"], dtype=float)))

    curve = accuracy_curve(np.array(p2d_frames),
                           np.array(thresholds_px or DEFAULT_THRESHOLDS_PX))
    return MetricReport(
        p2d=float(np.mean(p2d_frames)),
        mpjpe=float(np.mean(mpjpe_frames)),
        pve=float(np.mean(pve_frames)) if pve_frames else None,
        pa_mpjpe=float(np.mean(pa_frames)),
        pa_pve=float(np.mean(pa_pve_frames)) if pa_pve_frames else None,
        accuracy_curve=curve,
        control_point_error=float(np.mean(ctrl_frames)) if ctrl_frames else None,
        coverage=coverage,
        excluded_behind_camera=excluded,
    )


def save_report(report: MetricReport, path) -> None:
    fileio.write_doc(path, REPORT_FORMAT, {
        "p2dPx": report.p2d,
        "mpjpeMm": report.mpjpe,
        "pveMm": report.pve,
        "paMpjpeMm": report.pa_mpjpe,
        "paPveMm": report.pa_pve,
        "accuracyCurve": report.accuracy_curve,
        "controlPointErrorPx": report.control_point_error,
        "coverage": report.coverage,
        "excludedBehindCamera": report.excluded_behind_camera,
        "table": report.table(),
    })
