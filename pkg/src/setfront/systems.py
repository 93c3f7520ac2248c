"""Scenarios: a planar diffeomorphism ``f`` together with a noise radius.

All evaluators are vectorized: they accept a single point of shape ``(d,)``
or a batch ``(N, d)`` and return matching shapes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import (
    ConfigError,
    NoConvergence,
    NonFinite,
    SingularJacobian,
    ValidationFailed,
)

DET_MIN = 1e-10
ROUNDTRIP_TOL = 1e-9
JAC_REL_TOL = 1e-5
NEWTON_MAXITER = 100


@dataclass(frozen=True)
class DiffeoSpec:
    """A diffeomorphism given by batched evaluators.

    ``jacobian`` and ``inverse`` may be ``None``; central differences and a
    damped Newton iteration are used in their place.
    """

    dimension: int
    forward: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kind: str = "custom"
    parameters: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    diffeo: DiffeoSpec
    epsilon: float
    window: tuple

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        lo = np.asarray(self.window[0], dtype=float)
        hi = np.asarray(self.window[1], dtype=float)
        if lo.shape != (self.diffeo.dimension,) or hi.shape != lo.shape:
            raise ValueError("window corners must match the dimension")
        if np.any(hi <= lo):
            raise ValueError("window is degenerate")
        object.__setattr__(self, "window", (lo, hi))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def dimension(self):
        return self.diffeo.dimension

    @property
    def center(self):
        return 0.5 * (self.window[0] + self.window[1])

    def with_epsilon(self, epsilon):
        return replace(self, epsilon=epsilon)

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "map": {"kind": self.diffeo.kind, "params": dict(self.diffeo.parameters)},
            "epsilon": self.epsilon,
            "window": {"lo": self.window[0].tolist(), "hi": self.window[1].tolist()},
        }


@dataclass(frozen=True)
class PerturbationFamily:
    """``perturbed(delta)`` returns a scenario; ``delta = 0`` must give ``base``."""

    base: Scenario
    perturbed: Callable[[float], Scenario]
    name: str = "custom"

    def __call__(self, delta):
        if delta == 0:
            return self.base
        return self.perturbed(delta)


# -- evaluation ------------------------------------------------------------


def _batch(x, d):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[-1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {x.shape}")
    return x, single


def eval_forward(s, x):
    x, single = _batch(x, s.dimension)
    with np.errstate(over="ignore", invalid="ignore"):
        y = s.diffeo.forward(x)
    if not np.all(np.isfinite(y)):
        raise NonFinite("forward map overflowed")
    return y[0] if single else y


def fd_jacobian(forward, x):
    """Central differences with per-point step ``1e-6 * (1 + |x|)``."""
    n, d = x.shape
    step = 1e-6 * (1.0 + np.linalg.norm(x, axis=1))
    J = np.empty((n, d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        dx = step[:, None] * e
        J[:, :, j] = (forward(x + dx) - forward(x - dx)) / (2.0 * step[:, None])
    return J


def _jacobian_raw(s, x):
    if s.diffeo.jacobian is not None:
        return s.diffeo.jacobian(x)
    return fd_jacobian(s.diffeo.forward, x)


def eval_jacobian(s, x):
    x, single = _batch(x, s.dimension)
    J = _jacobian_raw(s, x)
    det = np.linalg.det(J)
    if np.any(~np.isfinite(det)) or np.any(np.abs(det) < DET_MIN):
        raise SingularJacobian(f"|det f'| = {np.nanmin(np.abs(det)):.3g} below {DET_MIN}")
    return J[0] if single else J


def newton_inverse(s, y, tol=1e-13, maxiter=NEWTON_MAXITER):
    """Solve ``f(x) = y`` by Newton's method started at ``x = y``.

    A step that increases the residual is halved (up to 30 times).
    """
    x = y.copy()
    f = s.diffeo.forward
    scale = 1.0 + np.linalg.norm(y, axis=1)
    r = f(x) - y
    res = np.linalg.norm(r, axis=1)
    active = res > tol * scale
    for _ in range(maxiter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        J = _jacobian_raw(s, x[idx])
        try:
            step = np.linalg.solve(J, r[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise SingularJacobian("singular Jacobian inside Newton inverse")
        t = np.ones(len(idx))
        for _ in range(30):
            trial = x[idx] - t[:, None] * step
            with np.errstate(over="ignore", invalid="ignore"):
                r_trial = f(trial) - y[idx]
            res_trial = np.linalg.norm(r_trial, axis=1)
            worse = ~(res_trial <= res[idx])
            if not worse.any():
                break
            t[worse] *= 0.5
        x[idx] = trial
        r[idx] = r_trial
        res[idx] = res_trial
        active = res > tol * scale
    if active.any():
        raise NoConvergence(
            f"Newton inverse did not converge for {int(active.sum())} point(s)"
        )
    return x


def eval_inverse(s, y):
    y, single = _batch(y, s.dimension)
    if s.diffeo.inverse is not None:
        with np.errstate(over="ignore", invalid="ignore"):
            x = s.diffeo.inverse(y)
    else:
        x = newton_inverse(s, y)
    if not np.all(np.isfinite(x)):
        raise NonFinite("inverse map produced non-finite values")
    return x[0] if single else x


def lattice(window, samples):
    lo, hi = window
    d = len(lo)
    k = max(2, int(math.ceil(samples ** (1.0 / d))))
    axes = [np.linspace(lo[i], hi[i], k) for i in range(d)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


@dataclass
class ValidationReport:
    samples: int
    max_roundtrip_error: float
    min_abs_det: float
    det_sign_constant: bool
    max_jacobian_discrepancy: float
    passed: bool
    first_failure: Optional[str] = None


def validate_scenario(s, samples=400, raise_on_fail=True):
    """Check on a window lattice that ``f`` behaves as a diffeomorphism.

    Checks run in order (determinant sign, determinant size, Jacobian
    against central differences, inverse round trip); the first violated
    one is reported.
    """
    if samples < 100:
        raise ValueError("validate_scenario needs at least 100 samples")
    x = lattice(s.window, samples)
    J = _jacobian_raw(s, x)
    det = np.linalg.det(J)
    nz = det[np.abs(det) > 0]
    sign_ok = bool(np.all(nz > 0) or np.all(nz < 0))
    min_det = float(np.min(np.abs(det)))

    if s.diffeo.jacobian is not None:
        Jfd = fd_jacobian(s.diffeo.forward, x)
        scale = np.maximum(np.abs(J).max(axis=(1, 2)), 1e-12)
        jac_err = float((np.abs(J - Jfd).max(axis=(1, 2)) / scale).max())
    else:
        jac_err = 0.0

    failure = None
    roundtrip = float("nan")
    if not sign_ok:
        failure = "det sign change"
    elif min_det < DET_MIN:
        failure = "det below threshold"
    elif jac_err > JAC_REL_TOL:
        failure = "jacobian mismatch"
    else:
        try:
            back = eval_inverse(s, eval_forward(s, x))
            roundtrip = float(np.linalg.norm(back - x, axis=1).max())
        except (NoConvergence, NonFinite, SingularJacobian):
            roundtrip = float("inf")
        if not roundtrip <= ROUNDTRIP_TOL:
            failure = "round trip"

    report = ValidationReport(
        samples=len(x),
        max_roundtrip_error=roundtrip,
        min_abs_det=min_det,
        det_sign_constant=sign_ok,
        max_jacobian_discrepancy=jac_err,
        passed=failure is None,
        first_failure=failure,
    )
    if failure is not None and raise_on_fail:
        raise ValidationFailed(failure, report)
    return report


# -- catalog ---------------------------------------------------------------


def affine(lam):
    """Isotropic linear map ``x -> lam * x``."""
    lam = float(lam)
    return DiffeoSpec(
        dimension=2,
        forward=lambda x: lam * x,
        jacobian=lambda x: np.broadcast_to(lam * np.eye(2), (len(x), 2, 2)).copy(),
        inverse=lambda y: y / lam,
        kind="affine",
        parameters={"lam": lam},
    )


def rotation_contraction(lam, theta):
    lam, theta = float(lam), float(theta)
    c, s = math.cos(theta), math.sin(theta)
    A = lam * np.array([[c, -s], [s, c]])
    Ainv = np.linalg.inv(A)
    return DiffeoSpec(
        dimension=2,
        forward=lambda x: x @ A.T,
        jacobian=lambda x: np.broadcast_to(A, (len(x), 2, 2)).copy(),
        inverse=lambda y: y @ Ainv.T,
        kind="rotation",
        parameters={"lam": lam, "theta": theta},
    )


def anisotropic(alpha, beta):
    alpha, beta = float(alpha), float(beta)
    A = np.diag([alpha, beta])
    scale = np.array([alpha, beta])
    return DiffeoSpec(
        dimension=2,
        forward=lambda x: x * scale,
        jacobian=lambda x: np.broadcast_to(A, (len(x), 2, 2)).copy(),
        inverse=lambda y: y / scale,
        kind="anisotropic",
        parameters={"alpha": alpha, "beta": beta},
    )


def radial(lam, a):
    """``x -> x (lam + a |x|^2)``; the inverse is left to Newton."""
    lam, a = float(lam), float(a)

    def forward(x):
        r2 = np.einsum("ij,ij->i", x, x)
        return x * (lam + a * r2)[:, None]

    def jacobian(x):
        r2 = np.einsum("ij,ij->i", x, x)
        J = 2.0 * a * x[:, :, None] * x[:, None, :]
        J[:, 0, 0] += lam + a * r2
        J[:, 1, 1] += lam + a * r2
        return J

    return DiffeoSpec(2, forward, jacobian, None, "radial", {"lam": lam, "a": a})


def _transition(t):
    """Smooth step: 1 for t <= 0, 0 for t >= 1, C-infinity in between.
    Returns the value and its derivative."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        g1 = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
        g0 = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        dg1 = np.where(t < 1.0, g1 / np.where(t < 1.0, (1.0 - t) ** 2, 1.0), 0.0)
        dg0 = np.where(t > 0.0, g0 / np.where(t > 0.0, t**2, 1.0), 0.0)
    den = g0 + g1
    val = g1 / den
    # d/dt [g1/(g0+g1)] with g1' = -dg1 (argument 1-t)
    dval = (-dg1 * den - g1 * (dg0 - dg1)) / den**2
    return val, dval


def bump(x, r_in, r_out):
    """Radial cutoff equal to 1 on ``|x| <= r_in`` and 0 beyond ``r_out``;
    returns the value and gradient."""
    r = np.linalg.norm(x, axis=1)
    val, dval = _transition((r - r_in) / (r_out - r_in))
    safe = np.where(r > 0, r, 1.0)
    grad = (dval / (r_out - r_in) / safe)[:, None] * x
    return val, grad


def shear(base, delta, r_in=2.0, r_out=4.0):
    """``base + delta * bump(x) * (x2^2, 0)``; inverse by Newton."""
    delta = float(delta)

    def g(x):
        b, _ = bump(x, r_in, r_out)
        out = np.zeros_like(x)
        out[:, 0] = b * x[:, 1] ** 2
        return out

    def dg(x):
        b, grad = bump(x, r_in, r_out)
        J = np.zeros((len(x), 2, 2))
        J[:, 0, 0] = grad[:, 0] * x[:, 1] ** 2
        J[:, 0, 1] = grad[:, 1] * x[:, 1] ** 2 + 2.0 * b * x[:, 1]
        return J

    base_jac = base.jacobian

    def forward(x):
        return base.forward(x) + delta * g(x)

    def jacobian(x):
        Jb = base_jac(x) if base_jac is not None else fd_jacobian(base.forward, x)
        return Jb + delta * dg(x)

    params = {"base": {"kind": base.kind, "params": dict(base.parameters)}, "delta": delta,
              "r_in": r_in, "r_out": r_out}
    return DiffeoSpec(2, forward, jacobian, None, "shear", params)


def bistable(c=1.0, mu=0.5):
    """``(x1 - c (x1^3 - x1/4), mu x2)``: attracting fixed points at
    ``x1 = +-1/2`` separated by a repeller at 0, so a small-noise system has
    two minimal invariant sets.  A diffeomorphism for ``|x1| < sqrt((1 + c/4) / (3c))``."""

    def forward(x):
        return np.stack([x[:, 0] - c * (x[:, 0] ** 3 - 0.25 * x[:, 0]), mu * x[:, 1]], axis=1)

    def jacobian(x):
        J = np.zeros((len(x), 2, 2))
        J[:, 0, 0] = 1.0 - c * (3.0 * x[:, 0] ** 2 - 0.25)
        J[:, 1, 1] = mu
        return J

    return DiffeoSpec(2, forward, jacobian, None, "bistable", {"c": c, "mu": mu})


def fold():
    """``(x1, x2) -> (x1^2, x2)``: not injective, used to exercise validation."""

    def forward(x):
        return np.stack([x[:, 0] ** 2, x[:, 1]], axis=1)

    def jacobian(x):
        J = np.zeros((len(x), 2, 2))
        J[:, 0, 0] = 2.0 * x[:, 0]
        J[:, 1, 1] = 1.0
        return J

    return DiffeoSpec(2, forward, jacobian, None, "fold", {})


def build_map(kind, params):
    p = dict(params or {})
    try:
        if kind == "affine":
            return affine(p["lam"])
        if kind == "identity":
            return affine(1.0)
        if kind == "rotation":
            return rotation_contraction(p["lam"], p["theta"])
        if kind == "anisotropic":
            return anisotropic(p["alpha"], p["beta"])
        if kind == "radial":
            return radial(p["lam"], p["a"])
        if kind == "shear":
            base = p.get("base", {"kind": "affine", "params": {"lam": p.get("lam", 0.5)}})
            return shear(build_map(base["kind"], base.get("params", {})), p["delta"],
                         p.get("r_in", 2.0), p.get("r_out", 4.0))
        if kind == "bistable":
            return bistable(p.get("c", 1.0), p.get("mu", 0.5))
        if kind == "fold":
            return fold()
    except KeyError as exc:
        raise ConfigError(f"map kind {kind!r} is missing parameter {exc}") from None
    raise ConfigError(f"unknown map kind {kind!r}")


def scenario_from_dict(doc):
    """Parse ``{dimension, map: {kind, params}, epsilon, window: {lo, hi}}``."""
    try:
        dim = int(doc["dimension"])
        spec = build_map(doc["map"]["kind"], doc["map"].get("params", {}))
        eps = float(doc["epsilon"])
        lo, hi = doc["window"]["lo"], doc["window"]["hi"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scenario: {exc}") from None
    if dim != spec.dimension:
        raise ConfigError(f"map {spec.kind!r} is {spec.dimension}-dimensional, config says {dim}")
    try:
        return Scenario(spec, eps, (lo, hi))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def square_window(half_width, center=(0.0, 0.0)):
    c = np.asarray(center, dtype=float)
    return (c - half_width, c + half_width)


# -- perturbation families -------------------------------------------------


def epsilon_family(base):
    """``delta -> (f, epsilon + delta)``."""
    return PerturbationFamily(base, lambda d: base.with_epsilon(base.epsilon + d), "epsilon")


def shear_family(base, r_in=2.0, r_out=4.0):
    """``delta -> (f + delta * bump * (x2^2, 0), epsilon)``."""
    return PerturbationFamily(
        base,
        lambda d: replace(base, diffeo=shear(base.diffeo, d, r_in, r_out)),
        "shear",
    )


def contraction_family(base):
    """Isotropic affine base ``lam * x`` perturbed to ``(lam + delta) * x``."""
    if base.diffeo.kind != "affine":
        raise ValueError("contraction family needs an affine base")
    lam = base.diffeo.parameters["lam"]
    return PerturbationFamily(
        base, lambda d: replace(base, diffeo=affine(lam + d)), "contraction"
    )


FAMILIES = {"epsilon": epsilon_family, "shear": shear_family, "contraction": contraction_family}


def family_from_dict(base, doc):
    kind = doc.get("kind") if isinstance(doc, dict) else doc
    if kind not in FAMILIES:
        raise ConfigError(f"unknown perturbation family {kind!r}")
    return FAMILIES[kind](base)


def catalog():
    """Named builtin scenarios with smooth minimal invariant sets."""
    return {
        "affine": Scenario(affine(0.5), 0.25, square_window(1.0)),
        "affine_strong": Scenario(affine(0.3), 0.1, square_window(0.5)),
        "rotation": Scenario(rotation_contraction(0.5, math.pi / 5), 0.25, square_window(1.0)),
        "anisotropic": Scenario(anisotropic(0.5, 0.6), 0.1, square_window(0.5)),
        "radial": Scenario(radial(0.5, 0.1), 0.25, square_window(1.0)),
        "shear": Scenario(shear(affine(0.5), 0.05), 0.25, square_window(1.0)),
    }
