"""The boundary map of the set-valued map on the unit tangent bundle.

``E(x, n) = (f(x) + eps * w, w)`` with ``w = f'(x)^{-T} n / |f'(x)^{-T} n|``.
It factors as the geodesic flow ``phi_eps(x, n) = (x + eps n, n)`` after the
normal transport ``h_f(x, n) = (f(x), w)``.

Point evaluation works in any dimension and on batches.  Differentials are
planar only and use the chart ``(x1, x2, theta)`` with ``n = (cos theta,
sin theta)``.
"""
from __future__ import annotations

import numpy as np

from .errors import SingularJacobian
from .geometry import TangentPoint, normalize, unit_vector, wrap_angle
from .systems import DET_MIN, _jacobian_raw, eval_forward, eval_inverse


def _as_tangent(p):
    base = np.asarray(p.base, dtype=float)
    normal = np.asarray(p.normal, dtype=float)
    single = base.ndim == 1
    if single:
        base, normal = base[None], normal[None]
    return base, normal, single


def _solve_transpose(J, n):
    det = np.linalg.det(J)
    if np.any(~np.isfinite(det)) or np.any(np.abs(det) < DET_MIN):
        raise SingularJacobian("Jacobian is singular at a tangent point")
    return np.linalg.solve(np.swapaxes(J, 1, 2), n[..., None])[..., 0]


def _pack(base, normal, single):
    return TangentPoint(base[0], normal[0]) if single else TangentPoint(base, normal)


def normal_transport(p, s):
    """``h_f(x, n) = (f(x), f'(x)^{-T} n / |f'(x)^{-T} n|)``."""
    x, n, single = _as_tangent(p)
    w = normalize(_solve_transpose(_jacobian_raw(s, x), n))
    return _pack(eval_forward(s, x), w, single)


def normal_transport_inverse(p, s):
    """``h_f^{-1}(x, n) = (f^{-1}(x), f'(f^{-1}(x))^T n / |.|)``."""
    x, n, single = _as_tangent(p)
    pre = eval_inverse(s, x)
    J = _jacobian_raw(s, pre)
    return _pack(pre, normalize(np.einsum("nji,nj->ni", J, n)), single)


def geodesic_flow(p, t):
    """Time-``t`` map ``(x, n) -> (x + t n, n)``."""
    return TangentPoint(np.asarray(p.base) + t * np.asarray(p.normal), np.asarray(p.normal))


def exponential_map(p, t):
    return np.asarray(p.base) + t * np.asarray(p.normal)


def boundary_map(p, s):
    """Evaluate ``E`` at one tangent point or a batch."""
    x, n, single = _as_tangent(p)
    w = normalize(_solve_transpose(_jacobian_raw(s, x), n))
    return _pack(eval_forward(s, x) + s.epsilon * w, w, single)


def boundary_map_inverse(q, s):
    """``E^{-1} = h_f^{-1} o phi_{-eps}``."""
    return normal_transport_inverse(geodesic_flow(q, -s.epsilon), s)


def iterate_boundary_map(p, s, k):
    for _ in range(k):
        p = boundary_map(p, s)
    return p


# -- planar chart ------------------------------------------------------------


def to_chart(p):
    x = np.asarray(p.base, dtype=float)
    n = np.asarray(p.normal, dtype=float)
    theta = np.arctan2(n[..., 1], n[..., 0])
    return np.concatenate([x, theta[..., None]], axis=-1)


def from_chart(z):
    z = np.asarray(z, dtype=float)
    return TangentPoint(z[..., :2], unit_vector(z[..., 2]))


def chart_differential(mapping, p, h=1e-6):
    """Central-difference differential of ``mapping`` (tangent point to
    tangent point) in the ``(x1, x2, theta)`` chart.  Angle differences are
    wrapped so the theta row never jumps by 2 pi."""
    z = to_chart(p)
    if z.shape != (3,):
        raise ValueError("chart differentials are defined for single planar tangent points")
    steps = np.eye(3) * h
    zp = z[None, :] + steps
    zm = z[None, :] - steps
    out_p = to_chart(mapping(from_chart(zp)))
    out_m = to_chart(mapping(from_chart(zm)))
    diff = out_p - out_m
    diff[:, 2] = wrap_angle(diff[:, 2])
    return (diff / (2.0 * h)).T


def boundary_map_differential(p, s, h=1e-6):
    """3x3 chart differential of ``E`` at a planar tangent point."""
    return chart_differential(lambda q: boundary_map(q, s), p, h)


def liouville_eval(p, v):
    """Liouville form ``a = n dx`` applied to a chart (or ``(x, n)``) vector:
    only the base component of ``v`` matters."""
    n = np.asarray(p.normal, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.dot(n, v[: n.shape[-1]]))


def contact_defect(p, s, v, h=1e-6):
    """``a_{E(p)}(dE v)``; vanishes for ``v`` in the contact plane at ``p``."""
    D = boundary_map_differential(p, s, h)
    return liouville_eval(boundary_map(p, s), D @ np.asarray(v, dtype=float))
