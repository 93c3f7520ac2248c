import math

import numpy as np
import pytest

from setfront.errors import NotInvariantLoop
from setfront.front import lift_circle, relax_to_invariant_loop
from setfront.geometry import t1_hausdorff_distance
from setfront.hyperbolicity import (
    Classification,
    SpectrumReport,
    classify,
    estimate_spectrum,
    loop_chart_tangents,
    report_to_dict,
)
from setfront.systems import Scenario, affine, catalog, square_window
from conftest import RADIAL_NORMAL_RATE

HF = 0.005


@pytest.fixture(scope="module")
def invariant_loops():
    out = {}
    for name, s in catalog().items():
        out[name] = relax_to_invariant_loop(lift_circle(s.center, s.epsilon, HF), s, 1e-8, 400)
    return out


def fake(t, n1, n2):
    return SpectrumReport(t, (n1, n2), 0.0, 60)


def test_classify_examples():
    c = classify(fake(0.0, -0.69, -0.69))
    assert c.verdict == "NormallyAttracting" and c.margin == pytest.approx(0.64)
    assert classify(fake(0.0, 0.69, 0.69)).verdict == "NormallyRepelling"
    assert classify(fake(0.0, 0.69, -0.69)).verdict == "ContactAnomaly"
    assert classify(fake(0.0, -0.02, -0.69)).verdict == "NotNormallyHyperbolic"
    assert classify(fake(-0.5, -0.3, -0.9)).verdict == "NotNormallyHyperbolic"


def test_report_sorts_normals():
    r = SpectrumReport(0.0, (-0.9, -0.1), 0.0, 60)
    assert r.normal_exponents == (-0.1, -0.9)
    d = report_to_dict(r, classify(r))
    assert set(d) == {"tangential", "normal", "spread", "iterations", "verdict", "margin"}
    assert d["normal"] == [-0.1, -0.9]


def test_loop_tangents_on_circle():
    l = lift_circle((0, 0), 0.5, HF)
    t = loop_chart_tangents(l)
    assert np.allclose(np.linalg.norm(t, axis=1), 1.0)
    # (dx, dtheta) = (r, 1) dphi along a circle of radius r
    assert np.allclose(np.abs(t[:, 2]), 1 / math.sqrt(1 + 0.25), atol=1e-4)


@pytest.mark.parametrize("name", ["affine", "rotation"])
def test_isotropic_rates(name, invariant_loops):
    r = estimate_spectrum(invariant_loops[name], catalog()[name])
    assert abs(r.tangential_exponent) <= 0.01
    assert np.allclose(r.normal_exponents, math.log(0.5), atol=0.01)
    assert r.iterations_used == 60


def test_radial_rate(invariant_loops):
    r = estimate_spectrum(invariant_loops["radial"], catalog()["radial"])
    assert abs(r.tangential_exponent) <= 0.01
    assert max(r.normal_exponents) < 0
    assert min(abs(n - RADIAL_NORMAL_RATE) for n in r.normal_exponents) <= 0.02


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.7])
def test_affine_family(lam):
    eps = 0.1
    r0 = eps / (1 - lam)
    s = Scenario(affine(lam), eps, square_window(2 * r0))
    l = relax_to_invariant_loop(lift_circle((0, 0), r0, HF), s, 1e-8)
    r = estimate_spectrum(l, s)
    assert abs(r.tangential_exponent) <= 0.01
    assert np.allclose(r.normal_exponents, math.log(lam), atol=0.01)


@pytest.mark.parametrize("name", sorted(catalog()))
def test_estimates_stable_under_doubling_and_reseeding(name, invariant_loops):
    s = catalog()[name]
    l = invariant_loops[name]
    base = estimate_spectrum(l, s)
    # numerical floor for estimators whose orbits agree to rounding
    tol = 2 * max(base.per_orbit_spread, 1e-6)
    for other in (estimate_spectrum(l, s, n_iter=120), estimate_spectrum(l, s, seed=11)):
        assert abs(other.tangential_exponent - base.tangential_exponent) <= tol
        assert np.abs(np.subtract(other.normal_exponents, base.normal_exponents)).max() <= tol


def test_dichotomy_audit(invariant_loops):
    verdicts = {name: classify(estimate_spectrum(invariant_loops[name], s)).verdict
                for name, s in catalog().items()}
    assert len(verdicts) >= 6
    assert "ContactAnomaly" not in verdicts.values()
    assert set(verdicts.values()) == {"NormallyAttracting"}


@pytest.mark.parametrize("name", sorted(catalog()))
def test_attracting_loops_reattract(name, invariant_loops):
    s = catalog()[name]
    L = invariant_loops[name]
    r = np.linalg.norm(L.x - s.center, axis=1).mean()
    again = relax_to_invariant_loop(lift_circle(s.center, r + 0.05, HF), s, 1e-8, 400)
    assert t1_hausdorff_distance(again, L) <= 1e-5


def test_not_invariant_loop_rejected():
    s = catalog()["affine"]
    with pytest.raises(NotInvariantLoop):
        estimate_spectrum(lift_circle((0, 0), 0.8, HF), s)
    with pytest.raises(ValueError):
        estimate_spectrum(lift_circle((0, 0), 0.5, HF), s, n_iter=10)


def test_seed_reproducibility(invariant_loops):
    s = catalog()["shear"]
    a = estimate_spectrum(invariant_loops["shear"], s, seed=4)
    b = estimate_spectrum(invariant_loops["shear"], s, seed=4)
    assert np.array_equal(a.orbit_exponents, b.orbit_exponents)
