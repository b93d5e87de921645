import numpy as np
import pytest

from manipsynth.geometry import (EmptyGeometryError, MeshError, OpenMeshError,
                                 RigidTransform, SpatialIndex, TriMesh,
                                 brute_force_closest_point, classify_inside,
                                 load_mesh, penetration_volume, save_mesh)
from manipsynth.primitives import make_box, make_capped_cylinder, make_icosphere
from manipsynth import so3


def random_mesh(rng, n_faces=40, scale=1.0):
    """Random triangle soup with non-degenerate faces."""
    tris = []
    while len(tris) < n_faces:
        t = rng.normal(0, scale, (3, 3))
        ab = t[1] - t[0]
        ac = t[2] - t[0]
        if 0.5 * np.linalg.norm(np.cross(ab, ac)) > 1e-6:
            tris.append(t)
    v = np.concatenate(tris)
    f = np.arange(3 * n_faces).reshape(-1, 3)
    return TriMesh(v, f)


# -- RigidTransform ----------------------------------------------------------


def test_rigid_transform_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        RigidTransform(np.eye(3) * 1.1, np.zeros(3))


def test_rigid_transform_rejects_reflection():
    R = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(ValueError):
        RigidTransform(R, np.zeros(3))


def test_rigid_compose_matches_matrix_oracle(rng):
    for _ in range(20):
        a = RigidTransform(so3.rotvec_to_matrix(rng.normal(0, 1, 3)), rng.normal(0, 1, 3))
        b = RigidTransform(so3.rotvec_to_matrix(rng.normal(0, 1, 3)), rng.normal(0, 1, 3))
        np.testing.assert_allclose(a.compose(b).as_matrix(),
                                   a.as_matrix() @ b.as_matrix(), atol=1e-12)


def test_rigid_inverse(rng):
    a = RigidTransform(so3.rotvec_to_matrix(rng.normal(0, 1, 3)), rng.normal(0, 1, 3))
    np.testing.assert_allclose(a.compose(a.inverse()).as_matrix(), np.eye(4), atol=1e-12)


# -- TriMesh invariants ------------------------------------------------------


def test_face_index_out_of_range():
    with pytest.raises(MeshError):
        TriMesh(np.zeros((3, 3)) + np.eye(3), np.array([[0, 1, 3]]))


def test_degenerate_triangle_rejected():
    v = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0]])   # collinear
    with pytest.raises(MeshError):
        TriMesh(v, np.array([[0, 1, 2]]))


def test_vertex_normals_unit_length():
    m = make_icosphere(1.0, 2)
    assert m.vertex_normals is not None
    np.testing.assert_allclose(np.linalg.norm(m.vertex_normals, axis=1), 1.0, atol=1e-6)


def test_is_closed():
    assert make_box().is_closed()
    open_mesh = TriMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                        np.array([[0, 1, 2]]))
    assert not open_mesh.is_closed()


# -- OBJ IO ------------------------------------------------------------------

CUBE_OBJ = """\
v -0.5 -0.5 -0.5
v -0.5 -0.5 0.5
v -0.5 0.5 -0.5
v -0.5 0.5 0.5
v 0.5 -0.5 -0.5
v 0.5 -0.5 0.5
v 0.5 0.5 -0.5
v 0.5 0.5 0.5
f 1 2 4
f 1 4 3
f 5 7 8
f 5 8 6
f 1 5 6
f 1 6 2
f 3 4 8
f 3 8 7
f 1 3 7
f 1 7 5
f 2 6 8
f 2 8 4
"""


def test_load_unit_cube(tmp_path):
    p = tmp_path / "cube.obj"
    p.write_text(CUBE_OBJ)
    m = load_mesh(p)
    assert len(m.vertices) == 8 and len(m.faces) == 12
    assert m.is_closed()


def test_load_bad_face_index(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text(CUBE_OBJ.replace("f 2 8 4", "f 2 8 9"))
    with pytest.raises(MeshError):
        load_mesh(p)


def test_load_malformed_line_names_line(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    with pytest.raises(MeshError) as exc:
        load_mesh(p)
    assert "line 1" in str(exc.value)


def test_load_degenerate_face_dropped(tmp_path):
    p = tmp_path / "degen.obj"
    p.write_text(CUBE_OBJ + "v 0.5 -0.5 -0.5\nf 5 9 7\n")
    with pytest.warns(UserWarning):
        m = load_mesh(p)
    assert len(m.faces) == 12


def test_obj_normals_preserved(tmp_path):
    sphere = make_icosphere(1.0, 2)
    p = tmp_path / "sphere.obj"
    save_mesh(sphere, p)
    m = load_mesh(p)
    np.testing.assert_allclose(np.linalg.norm(m.vertex_normals, axis=1), 1.0, atol=1e-6)
    # file-supplied normals should round-trip, not be recomputed
    np.testing.assert_allclose(m.vertex_normals, sphere.vertex_normals, atol=1e-8)


def test_obj_round_trip_bit_exact(tmp_path, rng):
    m = random_mesh(rng, 25)
    p0 = tmp_path / "a.obj"
    p1 = tmp_path / "b.obj"
    p2 = tmp_path / "c.obj"
    save_mesh(m, p0)
    save_mesh(load_mesh(p0), p1)       # normals now present
    save_mesh(load_mesh(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()
    np.testing.assert_array_equal(load_mesh(p1).faces, m.faces)


# -- closest point -----------------------------------------------------------


def test_closest_point_sphere_center():
    idx = SpatialIndex(make_icosphere(1.0, 3))
    _, d, _ = idx.closest_point(np.zeros(3))
    assert abs(d - 1.0) <= 0.01


def test_closest_point_at_vertex():
    m = make_box()
    idx = SpatialIndex(m)
    _, d, _ = idx.closest_point(m.vertices[3])
    assert d < 1e-12


def test_closest_point_outside_cube():
    idx = SpatialIndex(make_box())
    pt, d, fid = idx.closest_point(np.array([2.0, 0.0, 0.0]))
    assert abs(d - 1.5) < 1e-12
    np.testing.assert_allclose(pt, [0.5, 0.0, 0.0], atol=1e-12)
    assert 0 <= fid < len(idx.mesh.faces)


def test_empty_mesh_rejected():
    empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    with pytest.raises(EmptyGeometryError):
        SpatialIndex(empty)


def test_bvh_matches_brute_force(rng):
    for _ in range(10):
        m = random_mesh(rng, 30)
        idx = SpatialIndex(m)
        queries = rng.normal(0, 1.5, (100, 3))
        pts, dists, fids = idx.closest_points(queries)
        for q, p, d, fid in zip(queries, pts, dists, fids):
            p0, d0, _ = brute_force_closest_point(m, q)
            assert abs(d - d0) < 1e-9
            # returned point lies on the reported face
            tri = m.vertices[m.faces[fid]]
            n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
            assert abs(np.dot(p - tri[0], n / np.linalg.norm(n))) < 1e-9


# -- inside classification ---------------------------------------------------


def test_inside_cube_centroid():
    idx = SpatialIndex(make_box())
    assert classify_inside(idx, np.zeros((1, 3)))[0]


def test_outside_far_point():
    idx = SpatialIndex(make_box())
    assert not classify_inside(idx, np.array([[2.0, 0, 0]]))[0]


def test_inside_requires_normals():
    m = make_box()
    bare = TriMesh(m.vertices, m.faces)
    with pytest.raises(MeshError):
        classify_inside(SpatialIndex(bare), np.zeros((1, 3)))


def test_inside_sphere_matches_radius_oracle(rng):
    sphere = make_icosphere(1.0, 3)
    idx = SpatialIndex(sphere)
    q = rng.uniform(-1.4, 1.4, (1000, 3))
    r = np.linalg.norm(q, axis=1)
    # compare only away from the (faceted) surface
    keep = np.abs(r - 1.0) > 0.005
    mask = classify_inside(idx, q)
    np.testing.assert_array_equal(mask[keep], r[keep] < 1.0)


# -- penetration volume ------------------------------------------------------


def test_penetration_disjoint_zero():
    a = make_box(center=(0, 0, 0))
    b = make_box(center=(3, 0, 0))
    assert penetration_volume(a, b, 0.05) == 0.0


def test_penetration_half_overlap():
    a = make_box(center=(0, 0, 0))
    b = make_box(center=(0.5, 0, 0))
    v = penetration_volume(a, b, 0.01)
    assert abs(v - 0.5) / 0.5 < 0.02


def test_penetration_identical_cubes():
    a = make_box()
    v = penetration_volume(a, a, 0.01)
    assert abs(v - 1.0) < 0.02


def test_penetration_symmetry(rng):
    a = make_icosphere(0.4, 2)
    b = make_box(center=(0.3, 0.1, 0.0), size=(0.7, 0.6, 0.5))
    v1 = penetration_volume(a, b, 0.02)
    v2 = penetration_volume(b, a, 0.02)
    assert v1 > 0
    assert abs(v1 - v2) / v1 < 0.05


def test_penetration_open_mesh_error():
    open_mesh = TriMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                        np.array([[0, 1, 2]])).with_normals()
    with pytest.raises(OpenMeshError):
        penetration_volume(open_mesh, make_box(), 0.05)
