"""Persistence experiments: follow the invariant loop through a perturbation
family and compare it with the box-covering route."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import BaseNotAttracting, ContactDrift, NonConvergent, SingularFront
from .front import (
    TAU,
    ClosedCurve,
    lift_circle,
    lift_closed_curve,
    propagate_loop,
    relax_to_invariant_loop,
)
from .geometry import (
    densify_closed,
    hausdorff_distance,
    polyline_hausdorff,
    t1_hausdorff_distance,
)
from .hyperbolicity import Classification, classify, estimate_spectrum
from .setvalued import boxset_boundary_points, minimal_invariant_set

DENSIFY = 1e-3


@dataclass
class PersistenceRow:
    delta: float
    hausdorff_c0: Optional[float]
    normal_deviation_c1: Optional[float]
    verdict: Optional[Classification]
    converged: bool
    loop: object = field(default=None, repr=False)


@dataclass
class PersistenceTable:
    rows: list
    base_verdict: Classification
    base_loop: object = field(default=None, repr=False)
    cold_start_distance: Optional[float] = None


@dataclass
class EquivalenceReport:
    hausdorff: float
    threshold: float
    passed: bool
    certificate: object
    box_radius_range: tuple
    front_radius_range: tuple
    covering: object = field(default=None, repr=False)
    loop: object = field(default=None, repr=False)


def default_initial_loop(s, h_front):
    """Lifted circle of radius eps around the window center."""
    return lift_circle(s.center, s.epsilon, h_front)


def front_hausdorff(l1, l2, spacing=DENSIFY):
    """Hausdorff distance between two fronts as closed polylines."""
    return polyline_hausdorff(l1.x, l2.x, spacing)


def normal_deviation(base, other, spacing=DENSIFY):
    """Largest angle between a normal of ``other`` and the base normal at the
    nearest point of the (densified) base front."""
    dense = densify_closed(base.stacked(), spacing)
    bn = dense[:, 2:] / np.linalg.norm(dense[:, 2:], axis=1, keepdims=True)
    _, j = cKDTree(dense[:, :2]).query(other.x)
    cos = np.clip(np.einsum("ij,ij->i", bn[j], other.n), -1.0, 1.0)
    return float(np.arccos(cos).max())


def run_persistence_experiment(fam, deltas, tol=1e-6, h_front=0.005, base_loop=None,
                               n_orbits=4, n_iter=60, max_iter=400):
    """Relax the base invariant loop under each perturbed scenario.

    Rows are ordered by decreasing delta; a row that fails to converge keeps
    ``converged=False`` and empty distances.  For the largest delta the loop
    is also relaxed from a round circle, and the front distance between the
    two results is stored as ``cold_start_distance``.
    """
    base = fam.base
    l0 = base_loop if base_loop is not None else default_initial_loop(base, h_front)
    try:
        base_inv = relax_to_invariant_loop(l0, base, tol, max_iter)
    except (NonConvergent, SingularFront, ContactDrift) as exc:
        raise BaseNotAttracting(f"base relaxation failed: {exc}") from exc
    base_cls = classify(estimate_spectrum(base_inv, base, n_orbits, n_iter))
    if base_cls.verdict != "NormallyAttracting":
        raise BaseNotAttracting(f"base verdict is {base_cls.verdict}")

    rows = []
    cold = None
    for k, delta in enumerate(sorted(set(float(d) for d in deltas), reverse=True)):
        s = fam(delta)
        try:
            loop = relax_to_invariant_loop(base_inv, s, tol, max_iter)
            verdict = classify(estimate_spectrum(loop, s, n_orbits, n_iter))
        except (NonConvergent, SingularFront, ContactDrift):
            rows.append(PersistenceRow(delta, None, None, None, False))
            continue
        if k == 0:
            try:
                other = relax_to_invariant_loop(default_initial_loop(s, h_front), s, tol, max_iter)
                cold = front_hausdorff(loop, other)
            except (NonConvergent, SingularFront, ContactDrift):
                cold = float("inf")
        rows.append(PersistenceRow(
            delta,
            front_hausdorff(base_inv, loop),
            normal_deviation(base_inv, loop),
            verdict,
            True,
            loop,
        ))
    return PersistenceTable(rows, base_cls, base_inv, cold)


def verify_equivalence(s, grid, h_front, tol=1e-6, n_seeds=20, seed=0, initial_loop=None):
    """Compare the box-covering boundary with the front of the invariant loop.

    Passes iff their Hausdorff distance is at most ``2 * (h_box + h_front)``.
    """
    M, cert = minimal_invariant_set(s, grid, n_seeds=n_seeds, seed=seed)
    l0 = initial_loop if initial_loop is not None else default_initial_loop(s, h_front)
    loop = relax_to_invariant_loop(l0, s, tol)
    box_pts = boxset_boundary_points(M)
    front_pts = densify_closed(loop.x, DENSIFY)
    d = hausdorff_distance(box_pts, front_pts)
    threshold = 2.0 * (grid.h + h_front)
    rb = np.linalg.norm(box_pts - s.center, axis=1)
    rf = np.linalg.norm(loop.x - s.center, axis=1)
    return EquivalenceReport(
        d, threshold, d <= threshold, cert,
        (float(rb.min()), float(rb.max())), (float(rf.min()), float(rf.max())), M, loop,
    )


@dataclass
class CrossRouteRow:
    delta: float
    hausdorff: float
    threshold: float
    certificate_passed: bool

    @property
    def passed(self):
        return self.certificate_passed and self.hausdorff <= self.threshold


def cross_route_check(fam, table, grid_for, n_seeds=20, seed=0):
    """Box-cover every converged perturbed scenario and compare the covering
    boundary with that row's loop front.

    ``grid_for`` maps a scenario to the :class:`Grid` to use.
    """
    out = []
    for row in table.rows:
        if not row.converged:
            continue
        s = fam(row.delta)
        grid = grid_for(s)
        M, cert = minimal_invariant_set(s, grid, n_seeds=n_seeds, seed=seed, raise_on_fail=False)
        d = hausdorff_distance(boxset_boundary_points(M), densify_closed(row.loop.x, DENSIFY))
        out.append(CrossRouteRow(row.delta, d, 2.0 * (grid.h + row.loop.h_front), cert.passed))
    return out


def loop_distance(l1, l2, spacing=DENSIFY):
    """Unit-tangent Hausdorff distance between two loops taken as closed
    polylines in ``R^2 x R^2``, so vertex placement does not leave a floor of
    half a vertex step."""
    return t1_hausdorff_distance(densify_closed(l1.stacked(), spacing),
                                 densify_closed(l2.stacked(), spacing))


@dataclass
class BoundaryAttraction:
    attracting: bool
    inner_trace: list
    outer_trace: list


def _monotone_after(trace, burn_in):
    tail = trace[burn_in:]
    return all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(tail, tail[1:]))


def _normals_flipped(x, n):
    """True where the curve's own outward normal opposes the carried normal,
    i.e. the equidistant has passed through a focal point."""
    tangent = np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)
    outward = np.column_stack([tangent[:, 1], -tangent[:, 0]])
    return bool(np.any(np.einsum("ij,ij->i", outward, n) <= 0))


def attracting_boundary_check(s, l, eta, max_iter=200, burn_in=1, tau=TAU):
    """Push the inner and outer ``eta``-equidistants of the loop's front
    forward and check that both return to the loop.

    Traces record :func:`loop_distance` to ``l`` per step.
    Raises :class:`SingularFront` if an offset collapses immediately.
    """
    target = 2.0 * l.h_front
    traces = []
    for sign in (-1.0, 1.0):
        moved_x = l.x + sign * eta * l.n
        c = ClosedCurve(moved_x)
        if not c.is_simple or _normals_flipped(moved_x, l.n):
            raise SingularFront(f"offset by {sign * eta:+g} passes a focal point")
        try:
            cur = lift_closed_curve(c, l.h_front)
        except Exception as exc:
            raise SingularFront(f"offset by {sign * eta:+g} cannot be lifted: {exc}") from exc
        trace = [loop_distance(cur, l)]
        for _ in range(max_iter):
            if trace[-1] <= target:
                break
            cur = propagate_loop(cur, s, 1, tau)
            trace.append(loop_distance(cur, l))
        traces.append(trace)
    ok = all(t[-1] <= target and _monotone_after(t, burn_in) for t in traces)
    return BoundaryAttraction(ok, traces[0], traces[1])
