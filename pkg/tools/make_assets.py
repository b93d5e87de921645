"""Generate the bundled hand models, tool meshes, and template grasp poses.

Run from the repo root:  python3 tools/make_assets.py
Writes into src/manipsynth/assets/. Deterministic; safe to re-run.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from manipsynth.geometry import TriMesh, save_mesh
from manipsynth.grasp import FilterThresholds, score_candidate
from manipsynth.hand import HandModel, HandPose, save_hand_model
from manipsynth.fileio import save_pose
from manipsynth.primitives import make_box, make_capped_cylinder

ASSETS = Path(__file__).resolve().parents[1] / "src" / "manipsynth" / "assets"


def hat_weights(z, knots):
    """Piecewise-linear hat weights over sorted knots; rows sum to 1."""
    z = np.asarray(z, dtype=float)
    k = np.asarray(knots, dtype=float)
    w = np.zeros((len(z), len(k)))
    w[z <= k[0], 0] = 1.0
    w[z >= k[-1], -1] = 1.0
    for i in range(len(k) - 1):
        m = (z > k[i]) & (z < k[i + 1])
        t = (z[m] - k[i]) / (k[i + 1] - k[i])
        w[m, i] = 1.0 - t
        w[m, i + 1] = t
    return w


def assemble_hand(palm, finger_joints, wrist_pos, blend_start):
    """Stack palm + finger tubes into one model.

    fingers: list of (TriMesh, [joint positions along the finger]).
    Palm vertices bind to the wrist; finger vertices get hat weights over
    [blend_start, joint z positions...] mapped to [wrist, finger joints...].
    """
    verts = [palm.vertices]
    faces = [palm.faces]
    joint_parents = [-1]
    rest_joints = [wrist_pos]
    weight_blocks = []
    tip_ids = []

    n_joints_total = 1 + sum(len(j) for _, j in finger_joints)
    # palm: all weight on the wrist
    wp = np.zeros((len(palm.vertices), n_joints_total))
    wp[:, 0] = 1.0
    weight_blocks.append(wp)

    v_off = len(palm.vertices)
    j_off = 1
    for mesh, joints in finger_joints:
        verts.append(mesh.vertices)
        faces.append(mesh.faces + v_off)
        parent = 0
        for j in joints:
            joint_parents.append(parent)
            rest_joints.append(j)
            parent = len(joint_parents) - 1
        w = np.zeros((len(mesh.vertices), n_joints_total))
        knots = [blend_start] + [j[2] for j in joints]
        cols = [0] + list(range(j_off, j_off + len(joints)))
        hw = hat_weights(mesh.vertices[:, 2], knots)
        for c, col in enumerate(cols):
            w[:, col] = hw[:, c]
        weight_blocks.append(w)
        # top apex of the capped tube is the last vertex
        tip_ids.append(v_off + len(mesh.vertices) - 1)
        v_off += len(mesh.vertices)
        j_off += len(joints)

    return (np.concatenate(verts), np.concatenate(faces),
            np.array(joint_parents), np.array(rest_joints),
            np.concatenate(weight_blocks), np.array(tip_ids))


def build_full_hand() -> HandModel:
    """778-vertex, 16-joint stand-in hand: ellipse palm + five tubes."""
    palm = make_capped_cylinder(radius=0.035, length=0.05, radial=6, rings=11,
                                center=(0, 0, -0.005), axis=2, radius_scale=(1.0, 0.35))
    finger_x = [-0.028, -0.014, 0.0, 0.014, 0.028]
    fingers = []
    for x in finger_x:
        tube = make_capped_cylinder(radius=0.007, length=0.075, radial=7, rings=20,
                                    center=(x, 0, 0.0575), axis=2)
        joints = [np.array([x, 0, 0.03]), np.array([x, 0, 0.055]),
                  np.array([x, 0, 0.08])]
        fingers.append((tube, joints))
    v, f, jp, rj, w, tips = assemble_hand(palm, fingers, np.array([0, 0, -0.03]),
                                          blend_start=0.018)
    # contact mask: distal finger vertices plus front palm strip
    contact = np.flatnonzero((v[:, 2] > 0.06) | ((v[:, 2] > -0.02) & (v[:, 1] < -0.010)))
    model = HandModel(v, f, jp, rj, w, tips, contact_vertex_ids=contact)
    assert len(v) == 778 and len(jp) == 16, (len(v), len(jp))
    return model


def build_toy_hand() -> HandModel:
    """60-vertex, 5-joint two-finger hand for fast tests."""
    palm = make_capped_cylinder(radius=0.018, length=0.024, radial=7, rings=2,
                                center=(0, 0, 0.0), axis=2, radius_scale=(1.0, 0.45))
    fingers = []
    for x in (-0.008, 0.008):
        tube = make_capped_cylinder(radius=0.005, length=0.045, radial=4, rings=5,
                                    center=(x, 0, 0.0375), axis=2)
        joints = [np.array([x, 0, 0.02]), np.array([x, 0, 0.04])]
        fingers.append((tube, joints))
    v, f, jp, rj, w, tips = assemble_hand(palm, fingers, np.array([0, 0, -0.01]),
                                          blend_start=0.014)
    pads = np.arange(14)  # palm vertices fill the keypoint set out to 21
    contact = np.flatnonzero(v[:, 2] > 0.03)
    model = HandModel(v, f, jp, rj, w, tips, pad_keypoint_vertex_ids=pads,
                      contact_vertex_ids=contact)
    assert len(v) == 60 and len(jp) == 5, (len(v), len(jp))
    return model


def find_template_pose(model: HandModel, tool: TriMesh,
                       ty_range=(-0.022, -0.010), tz_range=(-0.085, -0.060)) -> HandPose:
    """Grid-search a hand placement that passes the candidate filters."""
    th = FilterThresholds()
    best = None
    J = model.num_joints
    for ty in np.linspace(*ty_range, 7):
        for tz in np.linspace(*tz_range, 8):
            pose = HandPose(np.zeros(3), np.array([0.0, ty, tz]),
                            np.zeros((J - 1, 3)))
            scores = score_candidate(model, pose, tool, th)
            ok = (scores["penetrationVolumeCm3"] <= th.max_penetration_cm3
                  and scores["contactVertexCount"] >= th.min_contact_vertices)
            if not ok:
                continue
            key = (scores["contactVertexCount"], -scores["penetrationVolumeCm3"])
            if best is None or key > best[0]:
                best = (key, pose, scores)
    if best is None:
        raise RuntimeError("no filter-passing template placement found")
    _, pose, scores = best
    print(f"  template scores: {scores}")
    return pose


def main():
    ASSETS.mkdir(parents=True, exist_ok=True)

    print("building hand models")
    full = build_full_hand()
    toy = build_toy_hand()
    save_hand_model(full, ASSETS / "full_hand.json")
    save_hand_model(toy, ASSETS / "toy_hand.json")

    print("building tool meshes")
    diskplacer = make_capped_cylinder(radius=0.008, length=0.15, radial=12,
                                      rings=10, axis=0)
    friem = make_capped_cylinder(radius=0.004, length=0.12, radial=10,
                                 rings=8, axis=0)
    scalpel = make_box(size=(0.14, 0.004, 0.010))
    save_mesh(diskplacer, ASSETS / "tool_diskplacer.obj")
    save_mesh(friem, ASSETS / "tool_friem.obj")
    save_mesh(scalpel, ASSETS / "tool_scalpel.obj")

    print("searching template poses")
    for name, tool, model in [("diskplacer", diskplacer, full)]:
        pose = find_template_pose(model, tool)
        save_pose(pose, ASSETS / f"template_{name}.json")

    pose = find_template_pose(toy, diskplacer, ty_range=(-0.018, -0.008), tz_range=(-0.058, -0.028))
    save_pose(pose, ASSETS / "template_toy.json")
    print("done ->", ASSETS)


if __name__ == "__main__":
    main()
