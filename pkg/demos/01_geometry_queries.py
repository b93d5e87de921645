"""
Mesh queries: closest points, inside tests, penetration volume
==============================================================

Builds a couple of primitive meshes and runs the spatial queries that the
grasp losses are made of.
"""

import numpy as np

from manipsynth import (RigidTransform, SpatialIndex, classify_inside,
                        penetration_volume)
from manipsynth.primitives import make_box, make_icosphere

rng = np.random.default_rng(0)

# a 1280-face icosphere of radius 1; distances from the center are ~1
sphere = make_icosphere(radius=1.0, subdivisions=3)
index = SpatialIndex(sphere)
point, distance, face_id = index.closest_point(np.zeros(3))
print(f"icosphere: {len(sphere.faces)} faces, "
      f"distance from center {distance:.4f} (facet error {1 - distance:.2e})")

# batch closest points for random queries
queries = rng.normal(0, 2.0, (5, 3))
_, dists, _ = index.closest_points(queries)
for q, d in zip(queries, dists):
    print(f"  |q| = {np.linalg.norm(q):.3f}  ->  surface distance {d:.3f}")

# inside/outside classification against an analytic box
box = make_box(size=(0.2, 0.2, 0.2))
pts = rng.uniform(-0.15, 0.15, (1000, 3))
inside = classify_inside(SpatialIndex(box), pts)
truth = np.max(np.abs(pts), axis=1) < 0.1
print(f"box inside test: {inside.sum()} of {len(pts)} inside, "
      f"agreement with analytic answer {np.mean(inside == truth):.1%}")

# penetration volume of two overlapping spheres (half-overlap slab)
a = make_icosphere(radius=0.05, subdivisions=3)
b = a.transformed(RigidTransform(np.eye(3), np.array([0.05, 0.0, 0.0])))
vol = penetration_volume(a, b, voxel_size=0.002)
lens_height = 0.05 - 0.025   # sphere-sphere lens half-width
analytic = 2 * np.pi * lens_height ** 2 * (0.05 - lens_height / 3)
print(f"overlap volume {vol * 1e6:.2f} cm^3 (analytic lens {analytic * 1e6:.2f} cm^3)")
