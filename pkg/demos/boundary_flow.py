"""Propagate a front with the boundary map until it stops moving.

Start from a circle of radius 1 around the origin under the nonlinear radial
map.  Each step maps the lifted loop (point, outward normal) forward; the
radius settles at the root of r = r (0.5 + 0.1 r^2) + 0.25.
"""
import numpy as np

from setfront import catalog, lift_circle, max_contact_residual, propagate_loop, t1_hausdorff_distance

s = catalog()["radial"]
l = lift_circle((0.0, 0.0), 1.0, 0.005)
for k in range(1, 41):
    nxt = propagate_loop(l, s, 1)
    moved = t1_hausdorff_distance(l, nxt)
    l = nxt
    if k % 5 == 0 or moved < 1e-8:
        r = np.linalg.norm(l.x, axis=1)
        print(f"step {k:2d}: radius {r.mean():.6f}  moved {moved:.2e}  "
              f"contact residual {max_contact_residual(l):.1e}")
    if moved < 1e-8:
        break
