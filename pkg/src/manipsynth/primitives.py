"""Procedural closed test meshes: box, icosphere, capped cylinder.

All outputs are watertight, outward-wound triangle meshes in meters.
"""

from __future__ import annotations

import numpy as np

from .geometry import TriMesh


def make_box(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0)) -> TriMesh:
    cx, cy, cz = center
    hx, hy, hz = np.asarray(size, dtype=float) / 2.0
    v = np.array([[x, y, z]
                  for x in (cx - hx, cx + hx)
                  for y in (cy - hy, cy + hy)
                  for z in (cz - hz, cz + hz)])
    # index bits: x*4 + y*2 + z
    f = np.array([
        [0, 1, 3], [0, 3, 2],        # -x
        [4, 6, 7], [4, 7, 5],        # +x
        [0, 4, 5], [0, 5, 1],        # -y
        [2, 3, 7], [2, 7, 6],        # +y
        [0, 2, 6], [0, 6, 4],        # -z
        [1, 5, 7], [1, 7, 3],        # +z
    ])
    return TriMesh(v, f).with_normals()


def make_icosphere(radius: float = 1.0, subdivisions: int = 3,
                   center=(0.0, 0.0, 0.0)) -> TriMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v[0])
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}
        verts = list(v)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                m = m / np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(m)
            return cache[key]

        new_faces = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        v = np.array(verts)
        f = np.array(new_faces)
    v = v * radius + np.asarray(center, dtype=float)
    return TriMesh(v, f).with_normals()


def make_capped_cylinder(radius: float = 0.01, length: float = 0.1,
                         radial: int = 12, rings: int = 8,
                         center=(0.0, 0.0, 0.0), axis: int = 2,
                         radius_scale=(1.0, 1.0)) -> TriMesh:
    """Closed tube with apex-fan caps: radial * rings + 2 vertices.

    radius_scale squashes the cross-section (ellipse) in the two
    non-axis directions.
    """
    if radial < 3 or rings < 2:
        raise ValueError("need radial >= 3 and rings >= 2")
    other = [k for k in range(3) if k != axis]
    angles = 2.0 * np.pi * np.arange(radial) / radial
    heights = np.linspace(-length / 2.0, length / 2.0, rings)
    verts = np.zeros((radial * rings + 2, 3))
    for h, z in enumerate(heights):
        rows = slice(h * radial, (h + 1) * radial)
        verts[rows, other[0]] = radius * radius_scale[0] * np.cos(angles)
        verts[rows, other[1]] = radius * radius_scale[1] * np.sin(angles)
        verts[rows, axis] = z
    bottom = radial * rings
    top = bottom + 1
    verts[bottom, axis] = -length / 2.0
    verts[top, axis] = length / 2.0

    faces = []
    for h in range(rings - 1):
        for k in range(radial):
            a = h * radial + k
            b = h * radial + (k + 1) % radial
            c = a + radial
            d = b + radial
            faces += [[a, b, d], [a, d, c]]
    for k in range(radial):
        a, b = k, (k + 1) % radial
        faces.append([bottom, b, a])
        a2 = (rings - 1) * radial + k
        b2 = (rings - 1) * radial + (k + 1) % radial
        faces.append([top, a2, b2])
    mesh = TriMesh(verts + np.asarray(center, dtype=float), np.array(faces))
    # ensure outward winding: flip if signed volume is negative
    a, b, c = (mesh.vertices[mesh.faces[:, k]] for k in range(3))
    vol = np.sum(np.einsum('ij,ij->i', a, np.cross(b, c))) / 6.0
    if vol < 0:
        mesh = TriMesh(mesh.vertices, mesh.faces[:, [0, 2, 1]])
    return mesh.with_normals()
