"""
Pose-estimation metrics
=======================

The standard error measures on constructed predictions where the answers are
known in closed form.
"""

import numpy as np

from manipsynth import (accuracy_curve, control_point_error, mpjpe, pa_metric,
                        procrustes_align, so3)

rng = np.random.default_rng(1)
gt = rng.normal(0, 100, (21, 3))          # millimeters

# uniform 14.35 mm per-joint error -> MPJPE exactly 14.35
d = rng.normal(0, 1, (21, 3))
d /= np.linalg.norm(d, axis=1, keepdims=True)
print(f"uniform 14.35 mm error: MPJPE = "
      f"{mpjpe(gt + 14.35 * d, gt, root_align=False):.2f} mm")

# a similarity transform is invisible to the Procrustes-aligned metric
pred = 1.7 * gt @ so3.rotvec_to_matrix(np.array([0.2, 0.5, -0.1])).T + [40, -10, 5]
s, R, t = procrustes_align(pred, gt)
print(f"procrustes recovers scale {1 / s:.2f}x inverse; "
      f"PA-MPJPE = {pa_metric(pred, gt):.2e} mm")

# accuracy-vs-threshold curve is monotone
errors = rng.exponential(8.0, 500)
curve = accuracy_curve(errors, np.arange(0.0, 50.0, 10.0))
print("accuracy curve:", ", ".join(f"{th:.0f}px:{frac:.2f}" for th, frac in curve))

# uniform 41.56 px corner error -> control-point error exactly 41.56
box = rng.uniform(0, 640, (8, 2))
e = rng.normal(0, 1, (8, 2))
e /= np.linalg.norm(e, axis=1, keepdims=True)
print(f"uniform 41.56 px corner error: control-point error = "
      f"{control_point_error(box + 41.56 * e, box):.2f} px")
