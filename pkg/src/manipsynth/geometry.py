"""Triangle meshes, rigid transforms, and proximity queries.

Everything downstream (grasp losses, candidate filtering, annotation export)
goes through this module for nearest-surface-point, inside/outside, and
penetration-volume computations. Units are meters throughout.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

MIN_TRIANGLE_AREA = 1e-12  # m^2; faces below this are dropped at load time


class MeshError(ValueError):
    """Malformed or unsuitable mesh data."""


class EmptyGeometryError(MeshError):
    """Query against a mesh with no triangles."""


class OpenMeshError(MeshError):
    """Operation requires a closed (watertight) mesh."""


# ---------------------------------------------------------------------------
# rigid transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion: x -> rotation @ x + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("rotation is not orthonormal (R^T R != I within 1e-9)")
        if np.linalg.det(R) < 0:
            raise ValueError("rotation has det < 0 (improper rotation)")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: apply `other` first, then `self`."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def as_matrix(self) -> np.ndarray:
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M


# ---------------------------------------------------------------------------
# triangle mesh
# ---------------------------------------------------------------------------


@dataclass
class TriMesh:
    """Indexed triangle mesh with optional unit per-vertex normals."""

    vertices: np.ndarray            # (N, 3) float
    faces: np.ndarray               # (F, 3) int
    vertex_normals: np.ndarray | None = None  # (N, 3) unit vectors

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and self.faces.max() >= len(self.vertices):
            raise MeshError(
                f"face index {self.faces.max()} out of range for "
                f"{len(self.vertices)} vertices")
        if self.faces.size and self.faces.min() < 0:
            raise MeshError("negative face index")
        if self.faces.size:
            areas = self.triangle_areas()
            if np.any(areas <= MIN_TRIANGLE_AREA):
                raise MeshError(
                    f"{int(np.sum(areas <= MIN_TRIANGLE_AREA))} degenerate "
                    f"triangle(s) with area <= {MIN_TRIANGLE_AREA} m^2")
        if self.vertex_normals is not None:
            vn = np.asarray(self.vertex_normals, dtype=float).reshape(-1, 3)
            if len(vn) != len(self.vertices):
                raise MeshError("vertex normal count does not match vertex count")
            norms = np.linalg.norm(vn, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise MeshError("vertex normals must be unit length within 1e-6")
            self.vertex_normals = vn

    # -- derived quantities ------------------------------------------------

    def triangle_areas(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def face_normals(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        n = np.cross(b - a, c - a)
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.maximum(lens, 1e-30)

    def compute_vertex_normals(self) -> np.ndarray:
        """Area-weighted average of incident face normals, unit length."""
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        weighted = np.cross(b - a, c - a)  # length = 2 * area
        vn = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(vn, self.faces[:, k], weighted)
        lens = np.linalg.norm(vn, axis=1, keepdims=True)
        vn = np.where(lens > 1e-30, vn / np.maximum(lens, 1e-30),
                      np.array([0.0, 0.0, 1.0]))  # unreferenced vertices
        return vn

    def with_normals(self) -> "TriMesh":
        if self.vertex_normals is not None:
            return self
        return TriMesh(self.vertices, self.faces, self.compute_vertex_normals())

    def is_closed(self) -> bool:
        """True iff every undirected edge is shared by exactly two faces."""
        if not self.faces.size:
            return False
        edges = np.concatenate([self.faces[:, [0, 1]],
                                self.faces[:, [1, 2]],
                                self.faces[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, tf: RigidTransform) -> "TriMesh":
        vn = None
        if self.vertex_normals is not None:
            vn = self.vertex_normals @ tf.rotation.T
        return TriMesh(tf.apply(self.vertices), self.faces.copy(), vn)


# ---------------------------------------------------------------------------
# closest point on triangles (vectorized Ericson-style region test)
# ---------------------------------------------------------------------------


def closest_points_on_triangles(tri_a, tri_b, tri_c, queries):
    """Closest point on each triangle (a,b,c) to each query point.

    tri_*: (F, 3); queries: (Q, 3). Returns (Q, F, 3) closest points.
    """
    a = tri_a[None, :, :]
    b = tri_b[None, :, :]
    c = tri_c[None, :, :]
    p = queries[:, None, :]

    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.sum(ab * ap, axis=-1)
    d2 = np.sum(ac * ap, axis=-1)

    bp = p - b
    d3 = np.sum(ab * bp, axis=-1)
    d4 = np.sum(ac * bp, axis=-1)

    cp = p - c
    d5 = np.sum(ab * cp, axis=-1)
    d6 = np.sum(ac * cp, axis=-1)

    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide='ignore', invalid='ignore'):
        v_ab = d1 / (d1 - d3)
        w_ac = d2 / (d2 - d6)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = 1.0 / (va + vb + vc)

    v_ab = np.nan_to_num(v_ab)
    w_ac = np.nan_to_num(w_ac)
    w_bc = np.nan_to_num(w_bc)
    denom = np.nan_to_num(denom)

    # interior point (default), then overwrite by region tests in priority order
    v = vb * denom
    w = vc * denom
    out = a + ab * v[..., None] + ac * w[..., None]

    # overwrite in reverse of the sequential check order so that earlier
    # (higher-priority) region tests win
    m_bc = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    pt = b + (c - b) * w_bc[..., None]
    out = np.where(m_bc[..., None], pt, out)

    m_ac = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    pt = a + ac * w_ac[..., None]
    out = np.where(m_ac[..., None], pt, out)

    m_c = (d6 >= 0) & (d5 <= d6)
    out = np.where(m_c[..., None], np.broadcast_to(c, out.shape), out)

    m_ab = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    pt = a + ab * v_ab[..., None]
    out = np.where(m_ab[..., None], pt, out)

    m_b = (d3 >= 0) & (d4 <= d3)
    out = np.where(m_b[..., None], np.broadcast_to(b, out.shape), out)
    m_a = (d1 <= 0) & (d2 <= 0)
    out = np.where(m_a[..., None], np.broadcast_to(a, out.shape), out)
    return out


def brute_force_closest_point(mesh: TriMesh, q: np.ndarray):
    """Reference closest-point: exhaustive scan over every triangle."""
    q = np.asarray(q, dtype=float).reshape(1, 3)
    ta = mesh.vertices[mesh.faces[:, 0]]
    tb = mesh.vertices[mesh.faces[:, 1]]
    tc = mesh.vertices[mesh.faces[:, 2]]
    pts = closest_points_on_triangles(ta, tb, tc, q)[0]
    d2 = np.sum((pts - q) ** 2, axis=1)
    fid = int(np.argmin(d2))
    return pts[fid], float(np.sqrt(d2[fid])), fid


# ---------------------------------------------------------------------------
# spatial index
# ---------------------------------------------------------------------------


@dataclass
class _BVHNode:
    lo: np.ndarray
    hi: np.ndarray
    left: int = -1
    right: int = -1
    face_ids: np.ndarray | None = None  # leaf payload


class SpatialIndex:
    """AABB tree over the triangles of one mesh; immutable after build.

    Single-point queries walk the tree best-first; batch queries use a
    chunked vectorized scan over all triangles, which for the mesh sizes
    handled here (<= a few thousand faces) is as fast as traversal and
    bit-identical to the brute-force reference.
    """

    LEAF_SIZE = 8

    def __init__(self, mesh: TriMesh):
        if mesh.faces.size == 0:
            raise EmptyGeometryError("cannot index a mesh with no faces")
        self.mesh = mesh
        self._ta = mesh.vertices[mesh.faces[:, 0]]
        self._tb = mesh.vertices[mesh.faces[:, 1]]
        self._tc = mesh.vertices[mesh.faces[:, 2]]
        self._centroids = (self._ta + self._tb + self._tc) / 3.0
        self._vertex_tree = cKDTree(mesh.vertices)
        self._nodes: list[_BVHNode] = []
        self._build(np.arange(len(mesh.faces)))

    # -- construction ------------------------------------------------------

    def _face_bounds(self, ids):
        pts = np.stack([self._ta[ids], self._tb[ids], self._tc[ids]])
        return pts.min(axis=(0, 1)), pts.max(axis=(0, 1))

    def _build(self, ids) -> int:
        lo, hi = self._face_bounds(ids)
        node = _BVHNode(lo=lo, hi=hi)
        idx = len(self._nodes)
        self._nodes.append(node)
        if len(ids) <= self.LEAF_SIZE:
            node.face_ids = ids
            return idx
        cent = self._centroids[ids]
        axis = int(np.argmax(cent.max(axis=0) - cent.min(axis=0)))
        order = np.argsort(cent[:, axis], kind='stable')
        half = len(ids) // 2
        node.left = self._build(ids[order[:half]])
        node.right = self._build(ids[order[half:]])
        return idx

    # -- queries -----------------------------------------------------------

    def _box_dist2(self, node: _BVHNode, q: np.ndarray) -> float:
        d = np.maximum(np.maximum(node.lo - q, 0.0), q - node.hi)
        return float(d @ d)

    def closest_point(self, q: np.ndarray):
        """Nearest surface point to q: (point, distance, face_id)."""
        q = np.asarray(q, dtype=float).reshape(3)
        best_d2 = np.inf
        best_pt = None
        best_fid = -1
        stack = [0]
        while stack:
            node = self._nodes[stack.pop()]
            if self._box_dist2(node, q) >= best_d2:
                continue
            if node.face_ids is not None:
                ids = node.face_ids
                pts = closest_points_on_triangles(
                    self._ta[ids], self._tb[ids], self._tc[ids], q[None, :])[0]
                d2 = np.sum((pts - q) ** 2, axis=1)
                k = int(np.argmin(d2))
                if d2[k] < best_d2:
                    best_d2 = float(d2[k])
                    best_pt = pts[k]
                    best_fid = int(ids[k])
            else:
                # visit nearer child first
                l, r = node.left, node.right
                dl = self._box_dist2(self._nodes[l], q)
                dr = self._box_dist2(self._nodes[r], q)
                if dl < dr:
                    stack.extend((r, l))
                else:
                    stack.extend((l, r))
        return best_pt, float(np.sqrt(best_d2)), best_fid

    def closest_points(self, queries: np.ndarray, chunk: int = 2048):
        """Batch closest points: (points (Q,3), distances (Q,), face_ids (Q,))."""
        queries = np.asarray(queries, dtype=float).reshape(-1, 3)
        n = len(queries)
        pts = np.empty((n, 3))
        dists = np.empty(n)
        fids = np.empty(n, dtype=np.int64)
        # keep the (chunk x faces) intermediate bounded
        chunk = max(1, min(chunk, int(4e6 / max(len(self.mesh.faces), 1)) + 1))
        for s in range(0, n, chunk):
            q = queries[s:s + chunk]
            cand = closest_points_on_triangles(self._ta, self._tb, self._tc, q)
            d2 = np.sum((cand - q[:, None, :]) ** 2, axis=2)
            k = np.argmin(d2, axis=1)
            rows = np.arange(len(q))
            pts[s:s + chunk] = cand[rows, k]
            dists[s:s + chunk] = np.sqrt(d2[rows, k])
            fids[s:s + chunk] = k
        return pts, dists, fids

    def surface_normals_at(self, face_ids: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Barycentric-interpolated vertex normals at surface points."""
        if self.mesh.vertex_normals is None:
            raise MeshError("mesh has no vertex normals; call with_normals() first")
        f = self.mesh.faces[face_ids]
        a, b, c = self._ta[face_ids], self._tb[face_ids], self._tc[face_ids]
        # barycentric coordinates of points in their triangles
        v0, v1 = b - a, c - a
        v2 = points - a
        d00 = np.einsum('ij,ij->i', v0, v0)
        d01 = np.einsum('ij,ij->i', v0, v1)
        d11 = np.einsum('ij,ij->i', v1, v1)
        d20 = np.einsum('ij,ij->i', v2, v0)
        d21 = np.einsum('ij,ij->i', v2, v1)
        denom = np.maximum(d00 * d11 - d01 * d01, 1e-30)
        v = (d11 * d20 - d01 * d21) / denom
        w = (d00 * d21 - d01 * d20) / denom
        u = 1.0 - v - w
        vn = self.mesh.vertex_normals
        n = (u[:, None] * vn[f[:, 0]] + v[:, None] * vn[f[:, 1]]
             + w[:, None] * vn[f[:, 2]])
        lens = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.maximum(lens, 1e-30)


# ---------------------------------------------------------------------------
# inside classification and penetration volume
# ---------------------------------------------------------------------------


def classify_inside(host_index: SpatialIndex, queries: np.ndarray) -> np.ndarray:
    """Boolean mask: query is inside the host mesh.

    Sign heuristic: a point is inside when the vector to its nearest surface
    point opposes the interpolated outward normal there. Requires a closed,
    consistently outward-wound host; unreliable near thin features.
    """
    if host_index.mesh.vertex_normals is None:
        raise MeshError("inside classification requires vertex normals on the host mesh")
    queries = np.asarray(queries, dtype=float).reshape(-1, 3)
    pts, _, fids = host_index.closest_points(queries)
    normals = host_index.surface_normals_at(fids, pts)
    side = np.einsum('ij,ij->i', queries - pts, normals)
    return side < 0.0


def penetration_volume(a: TriMesh, b: TriMesh, voxel_size: float = 0.002) -> float:
    """Overlap volume of two closed meshes by voxel-center counting.

    Samples voxel centers over the intersection of the two bounding boxes and
    counts centers classified inside both meshes.
    """
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    for name, m in (("first", a), ("second", b)):
        if not m.is_closed():
            raise OpenMeshError(f"{name} mesh is not closed; penetration volume undefined")
    lo = np.maximum(a.bounds()[0], b.bounds()[0])
    hi = np.minimum(a.bounds()[1], b.bounds()[1])
    if np.any(hi <= lo):
        return 0.0
    counts = np.maximum(np.ceil((hi - lo) / voxel_size).astype(int), 1)
    axes = [lo[k] + (np.arange(counts[k]) + 0.5) * voxel_size for k in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, 3)

    ia = SpatialIndex(a.with_normals())
    in_a = classify_inside(ia, grid)
    if not in_a.any():
        return 0.0
    ib = SpatialIndex(b.with_normals())
    in_b = classify_inside(ib, grid[in_a])
    return float(in_b.sum()) * voxel_size ** 3


# ---------------------------------------------------------------------------
# OBJ interchange
# ---------------------------------------------------------------------------


def load_mesh(path) -> TriMesh:
    """Load a triangle mesh from an ASCII OBJ file (v / vn / f records).

    Degenerate faces (area <= 1e-12 m^2) are dropped with a warning. When no
    vn records are present, area-weighted vertex normals are computed.
    """
    vertices = []
    normals = []
    faces = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            parts = line.split()
            tag = parts[0]
            try:
                if tag == 'v':
                    if len(parts) < 4:
                        raise ValueError("vertex needs three coordinates")
                    vertices.append([float(x) for x in parts[1:4]])
                elif tag == 'vn':
                    if len(parts) < 4:
                        raise ValueError("normal needs three components")
                    normals.append([float(x) for x in parts[1:4]])
                elif tag == 'f':
                    if len(parts) != 4:
                        raise ValueError("only triangular faces are supported")
                    idx = [int(p.split('/')[0]) for p in parts[1:4]]
                    faces.append([i - 1 for i in idx])
            except (ValueError, IndexError) as exc:
                raise MeshError(f"{path}: malformed record at line {lineno}: {raw.rstrip()!r}") from exc
    vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if faces.size and (faces.max() >= len(vertices) or faces.min() < 0):
        raise MeshError(f"{path}: face index out of range for {len(vertices)} vertices")

    if faces.size:
        a, b, c = (vertices[faces[:, k]] for k in range(3))
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        bad = areas <= MIN_TRIANGLE_AREA
        if bad.any():
            warnings.warn(f"{path}: dropped {int(bad.sum())} degenerate face(s)")
            faces = faces[~bad]

    vn = None
    if normals:
        vn = np.asarray(normals, dtype=float).reshape(-1, 3)
        lens = np.linalg.norm(vn, axis=1, keepdims=True)
        vn = vn / np.maximum(lens, 1e-30)
        if len(vn) != len(vertices):
            vn = None  # per-corner normals not supported; recompute
    mesh = TriMesh(vertices, faces, vn)
    if mesh.vertex_normals is None:
        mesh = mesh.with_normals()
    return mesh


def save_mesh(mesh: TriMesh, path) -> None:
    """Write an ASCII OBJ with coordinates at 9 significant digits."""
    with open(path, 'w') as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        if mesh.vertex_normals is not None:
            for n in mesh.vertex_normals:
                fh.write(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def mesh_to_obj_string(mesh: TriMesh) -> str:
    lines = [f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}" for v in mesh.vertices]
    lines += [f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}" for f in mesh.faces]
    return "\n".join(lines) + "\n"
