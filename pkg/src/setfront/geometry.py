"""Metric and chart primitives on the plane and its unit tangent bundle.

Tangent points are stored as pairs of arrays ``(base, normal)``; both may
carry a leading batch axis so that maps can be evaluated on whole loops at
once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateDirection, EmptySet, ZeroEdge

NORM_TOL = 1e-12
DEGENERATE_NORM = 1e-14


class TangentPoint(NamedTuple):
    """A point ``(x, n)`` of the unit tangent bundle (or a batch of them)."""

    base: np.ndarray
    normal: np.ndarray

    @classmethod
    def from_angle(cls, base, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(np.asarray(base, dtype=float), unit_vector(theta))

    @property
    def angle(self):
        """Chart angle of the normal (planar case only)."""
        return np.arctan2(self.normal[..., 1], self.normal[..., 0])

    def stacked(self):
        """``(..., 2d)`` array ``[x, n]`` used by the product metric."""
        return np.concatenate([self.base, self.normal], axis=-1)


@dataclass(frozen=True)
class LegendrianLoop:
    """Cyclic sequence of tangent points discretizing a closed Legendrian curve.

    ``x`` and ``n`` have shape ``(N, 2)``; vertex ``N-1`` connects back to
    vertex 0.  Use :func:`setfront.front.check_legendrian` to enforce the
    contact tolerance; the constructor only checks shapes and normal lengths.
    """

    x: np.ndarray
    n: np.ndarray
    h_front: float

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=float)
        n = np.ascontiguousarray(self.n, dtype=float)
        if x.ndim != 2 or x.shape != n.shape:
            raise ValueError("loop base points and normals must be (N, d) arrays")
        norms = np.linalg.norm(n, axis=1)
        if np.any(norms < DEGENERATE_NORM):
            raise DegenerateDirection("loop carries a zero normal")
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            n = n / norms[:, None]
        x.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "h_front", float(self.h_front))

    def __len__(self):
        return len(self.x)

    @property
    def points(self):
        return TangentPoint(self.x, self.n)

    @property
    def theta(self):
        return np.arctan2(self.n[:, 1], self.n[:, 0])

    def stacked(self):
        return np.hstack([self.x, self.n])


def unit_vector(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def wrap_angle(a):
    """Map angles to ``[-pi, pi)``."""
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


def normalize(v, axis=-1):
    """Scale ``v`` to unit length along ``axis``.

    Raises :class:`DegenerateDirection` when any input has norm below 1e-14,
    which is how a singular Jacobian application shows up downstream.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("normalize: non-finite input")
    norm = np.linalg.norm(v, axis=axis, keepdims=True)
    if np.any(norm < DEGENERATE_NORM):
        raise DegenerateDirection(f"cannot normalize vector of norm {norm.min():.3g}")
    return v / norm


def _as_points(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.size == 0 or len(a) == 0:
        raise EmptySet(f"{name} is empty")
    return a


def directed_hausdorff(A, B):
    """``sup_{a in A} dist(a, B)`` for finite point sets (exact)."""
    A = _as_points(A, "A")
    B = _as_points(B, "B")
    d, _ = cKDTree(B).query(A, k=1)
    return float(d.max())


def hausdorff_distance(A, B):
    """Hausdorff distance between two finite point sets in Euclidean space."""
    A = _as_points(A, "A")
    B = _as_points(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError("point sets live in different dimensions")
    return max(directed_hausdorff(A, B), directed_hausdorff(B, A))


def t1_hausdorff_distance(P, Q):
    """Hausdorff distance between tangent point sets under the product metric
    ``sqrt(|dx|^2 + |dn|^2)`` on ``R^d x R^d``."""
    P = _tangent_array(P, "P")
    Q = _tangent_array(Q, "Q")
    if P.shape[1] != Q.shape[1]:
        raise ValueError("tangent point sets of different ambient dimension")
    return hausdorff_distance(P, Q)


def _tangent_array(P, name):
    if isinstance(P, LegendrianLoop):
        return P.stacked()
    if isinstance(P, TangentPoint):
        arr = P.stacked()
        return arr[None, :] if arr.ndim == 1 else arr
    if isinstance(P, (list, tuple)) and P and isinstance(P[0], TangentPoint):
        return np.array([p.stacked() for p in P], dtype=float)
    arr = np.asarray(P, dtype=float)
    if arr.size == 0:
        raise EmptySet(f"{name} is empty")
    return arr


def densify_closed(points, max_spacing):
    """Insert points on the edges of a closed polyline so no gap exceeds
    ``max_spacing``.  Works for any number of columns (e.g. stacked ``[x, n]``)."""
    points = np.asarray(points, dtype=float)
    nxt = np.roll(points, -1, axis=0)
    seg = np.linalg.norm(nxt - points, axis=1)
    pieces = np.maximum(1, np.ceil(seg / max_spacing).astype(int))
    idx = np.repeat(np.arange(len(points)), pieces)
    start = np.cumsum(pieces) - pieces
    t = (np.arange(pieces.sum()) - np.repeat(start, pieces)) / np.repeat(pieces, pieces)
    return points[idx] + t[:, None] * (nxt[idx] - points[idx])


def polyline_hausdorff(A, B, spacing):
    """Hausdorff distance between two closed polylines, evaluated on
    densified vertex sets; the discretization error is at most ``spacing/2``."""
    return hausdorff_distance(densify_closed(A, spacing), densify_closed(B, spacing))


def contact_residual(loop):
    """Per-edge Liouville residuals ``<n_i, x_{i+1}-x_i> / |x_{i+1}-x_i|``.

    Exactly zero for a smooth Legendrian curve; for a vertex sampling of one
    with edge length h the residuals are O(h).
    """
    x = np.asarray(loop.x)
    n = np.asarray(loop.n)
    if len(x) < 3:
        raise ValueError("contact_residual needs at least 3 vertices")
    dx = np.roll(x, -1, axis=0) - x
    length = np.linalg.norm(dx, axis=1)
    if np.any(length < DEGENERATE_NORM):
        i = int(np.argmin(length))
        raise ZeroEdge(f"vertices {i} and {(i + 1) % len(x)} coincide")
    return np.einsum("ij,ij->i", n, dx) / length


def max_contact_residual(loop):
    return float(np.max(np.abs(contact_residual(loop))))


def circle_points(center, radius, n):
    t = 2.0 * np.pi * np.arange(n) / n
    return np.asarray(center, dtype=float) + radius * unit_vector(t)
