"""Equidistants of an ellipse and where they become singular.

Outward offsets of a convex curve stay smooth.  Inward offsets deeper than
the smallest curvature radius (b^2 / a = 0.25 here) pass through the
evolute and grow cusps, which the projection-speed test flags.
"""
from setfront import ellipse_curve, equidistant_front

c = ellipse_curve(1.0, 0.5)
for off in (0.5, 0.1, -0.1, -0.2, -0.3, -0.7):
    front, rep = equidistant_front(c, off, 0.005)
    print(f"offset {off:+.2f}: simple={front.is_simple!s:5s} flagged vertices={len(rep.flagged_indices):4d} "
          f"min projection speed {rep.min_projection_speed:.3f}")
