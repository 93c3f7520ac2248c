"""Tangential and normal growth rates of the boundary map along an invariant loop.

A frame of chart vectors is transported along orbits with the differential
of the boundary map.  At every step the first frame vector is reset to the
loop tangent at the current point and the rest are re-orthonormalized
against it, so the diagonal of the QR factor gives one tangential and two
normal log-stretches per step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .boundary import boundary_map, boundary_map_differential
from .errors import NotInvariantLoop
from .front import propagate_loop
from .geometry import TangentPoint, t1_hausdorff_distance, wrap_angle

VERDICTS = ("NormallyAttracting", "NormallyRepelling", "NotNormallyHyperbolic", "ContactAnomaly")


@dataclass
class SpectrumReport:
    tangential_exponent: float
    normal_exponents: tuple
    per_orbit_spread: float
    iterations_used: int
    orbit_exponents: np.ndarray = None

    def __post_init__(self):
        self.normal_exponents = tuple(sorted(map(float, self.normal_exponents), reverse=True))


@dataclass
class Classification:
    verdict: str
    margin: float


def loop_chart_tangents(l):
    """Unit chart tangents ``(dx1, dx2, dtheta)`` by cyclic central differences."""
    dx = np.roll(l.x, -1, axis=0) - np.roll(l.x, 1, axis=0)
    th = l.theta
    dth = wrap_angle(np.roll(th, -1) - np.roll(th, 1))
    t = np.column_stack([dx, dth])
    return t / np.linalg.norm(t, axis=1, keepdims=True)


def _orbit_exponents(p, s, tree, tangents, n_iter, h, burn_in=0):
    frame = _frame_from(tangents[tree.query(p.base)[1]], np.eye(3)[:, :2])
    sums = np.zeros(3)
    for k in range(burn_in + n_iter):
        image = boundary_map_differential(p, s, h) @ frame
        q, r = np.linalg.qr(image)
        if k >= burn_in:
            sums += np.log(np.abs(np.diag(r)))
        p = boundary_map(p, s)
        t_next = tangents[tree.query(p.base)[1]]
        if np.dot(t_next, image[:, 0]) < 0:
            t_next = -t_next
        frame = _frame_from(t_next, q[:, 1:])
    return sums / n_iter


def _frame_from(first, rest):
    """Orthonormal frame whose first column is the unit vector ``first``."""
    q, r = np.linalg.qr(np.column_stack([first, rest]))
    return q * np.sign(np.diag(r))


def estimate_spectrum(l, s, n_orbits=4, n_iter=60, seed=0, invariance_tol=1e-4, h=1e-6,
                      burn_in=50):
    """Birkhoff averages of per-step log stretches along ``n_orbits`` orbits
    started at loop vertices (chosen by ``seed``).

    The frame is transported for ``burn_in`` steps before averaging starts,
    so orbits leaving a repelling part of the loop do not bias the means.
    """
    if n_iter < 50:
        raise ValueError("n_iter must be at least 50")
    moved = t1_hausdorff_distance(l, propagate_loop(l, s, 1))
    if moved > invariance_tol:
        raise NotInvariantLoop(f"one step moves the loop by {moved:.3g} > {invariance_tol}")
    tree = cKDTree(l.x)
    tangents = loop_chart_tangents(l)
    rng = np.random.default_rng(seed)
    starts = np.sort(rng.choice(len(l), size=min(n_orbits, len(l)), replace=False))
    per = np.array([
        _orbit_exponents(TangentPoint(l.x[i], l.n[i]), s, tree, tangents, n_iter, h, burn_in)
        for i in starts
    ])
    tangential = per[:, 0]
    normal = np.sort(per[:, 1:], axis=1)[:, ::-1]
    mean_t = float(tangential.mean())
    mean_n = normal.mean(axis=0)
    spread = float(max(np.abs(tangential - mean_t).max(), np.abs(normal - mean_n).max()))
    return SpectrumReport(mean_t, tuple(mean_n), spread, n_iter, per)


def classify(r, gap=0.05):
    """Normal hyperbolicity verdict from a spectrum report.

    Mixed-sign normal rates cannot occur for a contactomorphism at a
    Legendrian loop, so they are reported as ``ContactAnomaly``.
    """
    t = float(r.tangential_exponent)
    n1, n2 = sorted(map(float, r.normal_exponents), reverse=True)
    attract = min(t - gap - n1, -gap - n1)
    repel = min(n2 - t - gap, n2 - gap)
    if attract > 0:
        return Classification("NormallyAttracting", attract)
    if repel > 0:
        return Classification("NormallyRepelling", repel)
    if n1 > gap and n2 < -gap:
        return Classification("ContactAnomaly", min(n1, -n2) - gap)
    return Classification("NotNormallyHyperbolic", max(attract, repel))


def report_to_dict(r, c):
    return {
        "tangential": float(r.tangential_exponent),
        "normal": [float(v) for v in r.normal_exponents],
        "spread": float(r.per_orbit_spread),
        "iterations": int(r.iterations_used),
        "verdict": c.verdict,
        "margin": float(c.margin),
    }
