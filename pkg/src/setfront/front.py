"""Discrete Legendrian loops in the unit tangent bundle of the plane.

A smooth closed curve is lifted to its outward unit normal bundle, pushed
forward by the boundary map, resampled to a uniform edge length and
projected back to a wave front.  Projection singularities (places where
the front stops being immersed) abort propagation instead of being
resolved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
import shapely
from shapely.geometry import LinearRing, Polygon
from skimage.measure import find_contours

from .boundary import boundary_map, geodesic_flow
from .errors import (
    ContactDrift,
    NonConvergent,
    NonLegendrian,
    RasterTooCoarse,
    SelfIntersecting,
    SingularFront,
    TooFewVertices,
)
from .geometry import (
    LegendrianLoop,
    TangentPoint,
    contact_residual,
    t1_hausdorff_distance,
    unit_vector,
    wrap_angle,
)

MIN_VERTICES = 16
CONTACT_TOL = 0.1
TAU = 0.05


@dataclass(frozen=True)
class ClosedCurve:
    """Cyclic polyline; vertex ``N-1`` connects back to vertex 0."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("curve vertices must be an (N, 2) array")
        if len(v) > 1 and np.allclose(v[0], v[-1]):
            v = v[:-1]
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    @property
    def signed_area(self):
        x, y = self.vertices.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def counterclockwise(self):
        return self.signed_area > 0

    @property
    def perimeter(self):
        return float(np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1).sum())

    @property
    def is_simple(self):
        if len(self.vertices) < 3:
            return False
        return bool(LinearRing(self.vertices).is_simple)

    def reversed(self):
        return ClosedCurve(self.vertices[::-1].copy())

    def oriented(self):
        """The same curve traversed counterclockwise."""
        return self if self.counterclockwise else self.reversed()


@dataclass
class SingularityReport:
    flagged_indices: list
    min_projection_speed: float
    tau: float = TAU
    speeds: np.ndarray = field(default=None, repr=False)

    @property
    def singular(self):
        return bool(self.flagged_indices)

    def to_dict(self):
        return {
            "flagged_indices": [int(i) for i in self.flagged_indices],
            "n_flagged": len(self.flagged_indices),
            "min_projection_speed": float(self.min_projection_speed),
            "tau": float(self.tau),
        }


# -- curve constructors ------------------------------------------------------


def circle_curve(center, radius, n=720):
    t = 2.0 * np.pi * np.arange(n) / n
    return ClosedCurve(np.asarray(center, dtype=float) + radius * unit_vector(t))


def ellipse_curve(a, b, n=2000, center=(0.0, 0.0)):
    t = 2.0 * np.pi * np.arange(n) / n
    return ClosedCurve(np.asarray(center) + np.stack([a * np.cos(t), b * np.sin(t)], axis=1))


def star_curve(radius_fn, n=2000, center=(0.0, 0.0)):
    """Star-shaped curve ``r(t) u(t)`` for a positive periodic ``radius_fn``."""
    t = 2.0 * np.pi * np.arange(n) / n
    return ClosedCurve(np.asarray(center) + radius_fn(t)[:, None] * unit_vector(t))


def random_star_curve(rng, mean_radius=0.5, modes=4, amplitude=0.12, n=2000, center=(0.0, 0.0)):
    """Smooth random star-shaped curve: a few low Fourier modes on a circle.

    Mode ``k`` gets amplitude at most ``amplitude / k^2`` so curvature stays
    moderate.
    """
    coef = rng.uniform(-1.0, 1.0, size=(modes, 2)) * amplitude / np.arange(1, modes + 1)[:, None] ** 2
    coef[0] = 0.0

    def r(t):
        k = np.arange(1, modes + 1)[:, None]
        return mean_radius + (coef[:, :1] * np.cos(k * t) + coef[:, 1:] * np.sin(k * t)).sum(axis=0)

    return star_curve(r, n, center)


# -- resampling --------------------------------------------------------------


def _arclength(x):
    seg = np.linalg.norm(np.roll(x, -1, axis=0) - x, axis=1)
    return seg, np.concatenate([[0.0], np.cumsum(seg)])


def _resample(x, theta, h, start=0.0):
    """Uniform arc-length resampling of a closed polyline.

    Base points are interpolated linearly along edges; if ``theta`` is given,
    normal angles are interpolated along the shorter arc between adjacent
    vertices.  The first output vertex sits at arc length ``start``.
    """
    seg, cum = _arclength(x)
    total = cum[-1]
    n_out = max(MIN_VERTICES, int(round(total / h)))
    s = (start + total * np.arange(n_out) / n_out) % total
    i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(x) - 1)
    frac = np.where(seg[i] > 0, (s - cum[i]) / np.where(seg[i] > 0, seg[i], 1.0), 0.0)
    j = (i + 1) % len(x)
    xr = x[i] + frac[:, None] * (x[j] - x[i])
    if theta is None:
        return xr, None
    th = theta[i] + frac * wrap_angle(theta[j] - theta[i])
    return xr, th


def _normal_anchor(x, theta):
    """Arc length of the point where the interpolated normal angle crosses
    zero (the support point in direction +x1); vertex 0 if none exists."""
    seg, cum = _arclength(x)
    d = wrap_angle(np.roll(theta, -1) - theta)
    th = wrap_angle(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = -th / d
    hit = (d != 0) & (frac >= 0) & (frac < 1)
    if not hit.any():
        return 0.0
    idx = np.flatnonzero(hit)
    j = (idx + 1) % len(x)
    px = x[idx, 0] + frac[idx] * (x[j, 0] - x[idx, 0])
    k = int(np.argmax(px))
    return float(cum[idx[k]] + frac[idx[k]] * seg[idx[k]])


def resample_loop(points, h_front, anchored=True):
    """Resample tangent points (arrays ``x``, ``n``) to edge length ``h_front``."""
    x = np.asarray(points.base, dtype=float)
    theta = np.arctan2(points.normal[:, 1], points.normal[:, 0])
    start = _normal_anchor(x, theta) if anchored else 0.0
    xr, th = _resample(x, theta, h_front, start)
    return LegendrianLoop(xr, unit_vector(th), h_front)


def resample_curve(c, h):
    xr, _ = _resample(c.vertices, None, h)
    return ClosedCurve(xr)


# -- lifting and checks --------------------------------------------------------


def _validate_curve(c):
    if len(c) < MIN_VERTICES:
        raise TooFewVertices(f"curve has {len(c)} vertices, need {MIN_VERTICES}")
    if not c.is_simple:
        raise SelfIntersecting("curve is not simple")


def lift_closed_curve(c, h_front):
    """Outward unit normal lift of a simple closed curve.

    The curve is resampled to edge length ``h_front`` from its vertex 0; the
    normal at each vertex is the central-difference tangent rotated by -90
    degrees (outward for counterclockwise traversal).  Clockwise input is
    reversed first.
    """
    _validate_curve(c)
    c = c.oriented()
    x, _ = _resample(c.vertices, None, h_front)
    t = np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)
    n = np.stack([t[:, 1], -t[:, 0]], axis=1)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    return LegendrianLoop(x, n, h_front)


def lift_circle(center, radius, h_front):
    """Exact lift of a circle, vertices at uniform angles starting at angle 0."""
    n_vert = max(MIN_VERTICES, int(round(2.0 * np.pi * radius / h_front)))
    u = unit_vector(2.0 * np.pi * np.arange(n_vert) / n_vert)
    return LegendrianLoop(np.asarray(center, dtype=float) + radius * u, u, h_front)


def check_legendrian(l, tol=CONTACT_TOL):
    r = float(np.abs(contact_residual(l)).max())
    if r > tol:
        raise NonLegendrian(f"max contact residual {r:.3g} exceeds {tol}")
    return r


def front_projection(l):
    """Base polyline of the loop; check ``.is_simple`` on the result."""
    return ClosedCurve(np.array(l.x))


def detect_projection_singularities(l, tau=TAU):
    """Flag vertices where the projection to the plane stops being immersive.

    The relative projection speed at vertex i is
    ``|x_{i+1} - x_{i-1}| / (|x_{i+1} - x_{i-1}| + |theta_{i+1} - theta_{i-1}|)``
    and vertex i is flagged when it falls below ``tau``.
    """
    x = np.asarray(l.x if isinstance(l, LegendrianLoop) else l.base)
    n = np.asarray(l.n if isinstance(l, LegendrianLoop) else l.normal)
    theta = np.arctan2(n[:, 1], n[:, 0])
    dx = np.linalg.norm(np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0), axis=1)
    dth = np.abs(wrap_angle(np.roll(theta, -1) - np.roll(theta, 1)))
    den = dx + dth
    speed = np.where(den > 0, dx / np.where(den > 0, den, 1.0), 0.0)
    flagged = np.flatnonzero(speed < tau)
    return SingularityReport(flagged.tolist(), float(speed.min()), tau, speed)


def _in_window(x, s):
    lo, hi = s.window
    return bool(np.all((x >= lo) & (x <= hi)))


def propagate_loop(l, s, steps, tau=TAU, contact_tol=CONTACT_TOL):
    """Apply the boundary map ``steps`` times, resampling after each step.

    Raises :class:`SingularFront` if a mapped loop has projection
    singularities and :class:`ContactDrift` if the resampled loop violates
    the contact tolerance.
    """
    report = detect_projection_singularities(l, tau)
    if report.singular:
        raise SingularFront("input loop has projection singularities", report, l)
    for _ in range(steps):
        image = boundary_map(l.points, s)
        report = detect_projection_singularities(image, tau)
        if report.singular:
            raise SingularFront(
                f"{len(report.flagged_indices)} singular vertices after a step", report, image
            )
        l = resample_loop(image, l.h_front)
        r = float(np.abs(contact_residual(l)).max())
        if r > contact_tol:
            raise ContactDrift(f"contact residual {r:.3g} exceeds {contact_tol}")
    return l


def relax_to_invariant_loop(l0, s, tol=1e-6, max_iter=200, tau=TAU):
    """Iterate single propagation steps until consecutive loops are within
    ``tol`` in the unit-tangent Hausdorff distance.

    Raises :class:`NonConvergent` after ``max_iter`` steps or as soon as the
    loop leaves the scenario window.
    """
    cur = l0
    for k in range(max_iter):
        nxt = propagate_loop(cur, s, 1, tau)
        if not _in_window(nxt.x, s):
            raise NonConvergent(f"loop left the working window after {k + 1} steps", nxt)
        if t1_hausdorff_distance(cur, nxt) <= tol:
            return nxt
        cur = nxt
    raise NonConvergent(f"no convergence within {max_iter} steps", cur)


def equidistant_front(c, offset, h_front, tau=TAU):
    """Signed normal equidistant of a simple curve (positive = outward).

    Returns the projected front, unresampled so singularities survive, and
    the singularity report of the moved loop.
    """
    l = lift_closed_curve(c, h_front)
    moved = geodesic_flow(l.points, offset)
    report = detect_projection_singularities(moved, tau)
    return ClosedCurve(np.array(moved.base)), report


# -- raster oracle -------------------------------------------------------------


def rasterized_minkowski_boundary(c, eps, raster):
    """Outer boundary of ``region(c) + closed disk(eps)`` by brute force.

    Pixels whose centers lie in the closed region bounded by ``c`` are
    filled, a Euclidean distance transform gives the distance to the filled
    pixels, and marching squares extracts the ``eps`` level set; the contour
    enclosing the largest area is returned.
    """
    if raster > eps / 10.0:
        raise RasterTooCoarse(f"raster {raster} exceeds eps/10 = {eps / 10}")
    v = c.vertices
    margin = eps + 4.0 * raster
    lo = v.min(axis=0) - margin
    shape = tuple(np.ceil((v.max(axis=0) + margin - lo) / raster).astype(int) + 1)
    # pixel (i, j) has its center at lo + (i, j) * raster
    axes = [lo[k] + raster * np.arange(shape[k]) for k in range(2)]
    X, Y = np.meshgrid(*axes, indexing="ij")
    poly = Polygon(v)
    shapely.prepare(poly)
    filled = shapely.intersects_xy(poly, X, Y)
    dist = ndimage.distance_transform_edt(~filled) * raster
    contours = find_contours(dist, eps)
    best = max(contours, key=lambda p: abs(ClosedCurve(p).signed_area))
    return ClosedCurve(lo + best * raster).oriented()
