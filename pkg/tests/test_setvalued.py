import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from setfront.errors import CertificateFailed, NotInvariant, WindowEscape
from setfront.geometry import circle_points, hausdorff_distance
from setfront.setvalued import (
    BoxSet,
    Grid,
    boxset_boundary_points,
    boxset_hausdorff,
    dual_image,
    image_boxset,
    inflate,
    is_attractor,
    minimal_invariant_set,
    omega_limit,
    within_one_ring,
)
from setfront.systems import (
    Scenario,
    _jacobian_raw,
    affine,
    bistable,
    catalog,
    eval_forward,
    square_window,
)
from conftest import R_STAR

H = 0.02


def brute_image(S, s):
    """Every cell of S is sampled at its center; a cell is in the image iff
    its center lies within eps + L*h*sqrt(2)/2 of some sample."""
    g = S.grid
    x = S.centers
    y = eval_forward(s, x)
    L = np.linalg.norm(_jacobian_raw(s, x), ord=2, axis=(1, 2))
    r = s.epsilon + L * g.h * math.sqrt(2) / 2
    X, Y = np.meshgrid(*g.axes(), indexing="ij")
    c = np.stack([X.ravel(), Y.ravel()], axis=1)
    inside = np.zeros(len(c), dtype=bool)
    for yi, ri in zip(y, r):
        inside |= np.linalg.norm(c - yi, axis=1) <= ri * (1 + 1e-12)
    return BoxSet(g, inside.reshape(g.shape))


def annulus(g, r_in, r_out):
    return BoxSet.from_predicate(
        g, lambda p: (np.linalg.norm(p, axis=1) <= r_out) & (np.linalg.norm(p, axis=1) >= r_in)
    )


def grid_for(s, h=H):
    return Grid.for_scenario(s, h)


def boundary_error(M, radius, center=(0.0, 0.0)):
    return hausdorff_distance(boxset_boundary_points(M), circle_points(center, radius, 4000))


def test_image_examples():
    s = catalog()["affine"]
    g = Grid.for_scenario(s, 0.01)
    M = BoxSet.disk(g, 0.5)
    assert within_one_ring(image_boxset(M, s), M)

    ident = Scenario(affine(1.0), 0.25, square_window(1.0))
    img = image_boxset(BoxSet.from_points(g, [0.0, 0.0]), ident)
    assert within_one_ring(img, BoxSet.disk(g, 0.25, g.centers(g.cell_of([0.0, 0.0]))))

    expand = Scenario(affine(2.0), 0.1, square_window(2.0))
    with pytest.raises(WindowEscape):
        image_boxset(BoxSet.disk(Grid.for_scenario(expand, 0.02), 1.0), expand)


@pytest.mark.parametrize("name", sorted(catalog()))
def test_image_matches_brute_force(name):
    s = catalog()[name]
    g = grid_for(s)
    half = float(s.window[1][0])
    for S in (BoxSet.disk(g, 0.4 * half), annulus(g, 0.15 * half, 0.45 * half),
              BoxSet.from_points(g, [[0.1 * half, -0.2 * half]])):
        assert image_boxset(S, s) == brute_image(S, s)


def test_annulus_hole_survives_under_small_eps():
    s = Scenario(affine(0.9), 0.02, square_window(1.0))
    g = grid_for(s)
    img = image_boxset(annulus(g, 0.4, 0.6), s)
    assert img == brute_image(annulus(g, 0.4, 0.6), s)
    assert not img.mask[g.cell_of([0.0, 0.0])[0], g.cell_of([0.0, 0.0])[1]]


@given(st.integers(0, 10_000), st.floats(0.05, 0.3), st.floats(0.0, 0.3))
def test_monotonicity(seed, r_small, extra):
    s = catalog()["radial"]
    g = grid_for(s)
    rng = np.random.default_rng(seed)
    c = rng.uniform(-0.2, 0.2, 2)
    S = BoxSet.disk(g, r_small, c)
    blob = BoxSet.from_predicate(g, lambda p: rng.random(len(p)) < 0.3)
    blob = BoxSet(g, blob.mask & BoxSet.disk(g, r_small + extra, c).mask)
    T = BoxSet(g, S.mask | blob.mask)
    assert image_boxset(S, s).issubset(image_boxset(T, s))


@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_continuity_shadow(x1, x2, dx1, dx2):
    s = catalog()["radial"]
    g = grid_for(s)
    x = np.array([x1, x2])
    xp = x + [dx1, dx2]
    a = image_boxset(BoxSet.from_points(g, x), s)
    b = image_boxset(BoxSet.from_points(g, xp), s)
    L = np.linalg.norm(_jacobian_raw(s, np.array([[0.55, 0.55]]))[0], ord=2)
    assert boxset_hausdorff(a, b) <= L * np.linalg.norm(xp - x) + 4 * g.h


def test_omega_limit_examples():
    s = catalog()["affine"]
    g = Grid.for_scenario(s, 0.01)
    A = omega_limit([0.9, 0.9], s, g)
    B = omega_limit([0.1, 0.0], s, g)
    # outside and inside seeds settle on the upper and lower grid fixed points
    assert B.issubset(A) and within_one_ring(A, B)
    assert boxset_hausdorff(A, B) <= g.h
    assert boundary_error(A, 0.5) <= 2 * g.h
    expand = Scenario(affine(2.0), 0.1, square_window(2.0))
    with pytest.raises(WindowEscape):
        omega_limit([0.3, 0.1], expand, Grid.for_scenario(expand, 0.02))


def test_seed_outside_window():
    s = catalog()["affine"]
    with pytest.raises(ValueError):
        omega_limit([5.0, 0.0], s, grid_for(s))


@pytest.mark.parametrize("name,radius", [("affine", 0.5), ("rotation", 0.5), ("radial", R_STAR)])
def test_minimal_set_examples(name, radius):
    s = catalog()[name]
    g = Grid.for_scenario(s, 0.01)
    M, cert = minimal_invariant_set(s, g, n_seeds=8, seed=3)
    assert cert.passed and cert.max_defect <= cert.threshold == 2 * g.h
    assert len(cert.seeds) == 8
    assert boundary_error(M, radius) <= 2 * g.h
    assert within_one_ring(image_boxset(M, s), M)


def bistable_scenario():
    return Scenario(bistable(), 0.02, ((-0.6, -0.3), (0.6, 0.3)))


def test_certificate_fails_with_two_minimal_sets():
    s = bistable_scenario()
    g = Grid.for_scenario(s, 0.01)
    with pytest.raises(CertificateFailed) as info:
        minimal_invariant_set(s, g, n_seeds=5)
    cert = info.value.certificate
    assert cert.verdict == "fail" and cert.max_defect > 0.5
    M = info.value.covering
    # the covering spans both basins, each seed sees only its own
    xs = M.centers[:, 0]
    assert xs.min() < -0.4 and xs.max() > 0.4
    M2, cert2 = minimal_invariant_set(s, g, n_seeds=5, raise_on_fail=False)
    assert M2 == M and not cert2.passed


def test_dual_examples():
    s = Scenario(affine(2.0), 1.0, square_window(2.0))
    g = Grid.for_scenario(s, 0.02)
    origin = BoxSet.from_points(g, [0.0, 0.0])
    c0 = g.centers(g.cell_of([0.0, 0.0]))
    assert boundary_error(dual_image(origin, s), 0.5, c0 / 2) <= 2 * g.h
    s = catalog()["affine"]
    g = Grid.for_scenario(s, 0.01)
    origin = BoxSet.from_points(g, [0.0, 0.0])
    c0 = g.centers(g.cell_of([0.0, 0.0]))
    assert boundary_error(dual_image(origin, s), 0.5, 2 * c0) <= 2 * g.h


@pytest.mark.parametrize("name", ["affine", "radial", "anisotropic"])
def test_duality_on_random_pairs(name):
    s = catalog()[name]
    half = float(s.window[1][0])
    # preimages of eps-balls reach eps / contraction beyond the point
    s = dataclasses.replace(s, window=square_window(3 * half))
    g = grid_for(s)
    rng = np.random.default_rng(7)
    ring = np.ones((3, 3), dtype=bool)
    from scipy import ndimage

    hits = 0
    for _ in range(200):
        x = rng.uniform(-0.2 * half, 0.2 * half, 2)
        u = rng.normal(size=2)
        y = eval_forward(s, x) + 1.3 * s.epsilon * rng.random() * u / np.linalg.norm(u)
        X = BoxSet.from_points(g, x)
        Y = BoxSet.from_points(g, y)
        fwd = image_boxset(X, s)
        back = dual_image(Y, s)
        iy, ix = tuple(g.cell_of(y)), tuple(g.cell_of(x))
        if fwd.mask[iy]:
            assert ndimage.binary_dilation(back.mask, ring)[ix]
        if back.mask[ix]:
            assert ndimage.binary_dilation(fwd.mask, ring)[iy]
        hits += bool(fwd.mask[iy])
    assert 50 < hits < 190


def test_is_attractor_examples():
    s = catalog()["affine"]
    g = Grid.for_scenario(s, 0.01)
    M = BoxSet.disk(g, 0.5)
    tr = is_attractor(M, s, 0.3)
    assert tr.attracting
    d = np.array(tr.distances)
    coarse = d[:-1] > 5 * g.h
    ratios = d[1:][coarse] / d[:-1][coarse]
    assert len(ratios) >= 2 and np.all(np.abs(ratios - 0.5) <= 0.1)
    with pytest.raises(NotInvariant):
        is_attractor(BoxSet.disk(g, 0.3), s, 0.3)
    s = catalog()["rotation"]
    assert is_attractor(BoxSet.disk(g, 0.5), s, 0.3).attracting


def test_inflate():
    g = Grid((-1, -1), (1, 1), 0.1)
    M = BoxSet.from_points(g, [0.05, 0.05])
    assert len(inflate(M, 0.1)) == 5
    assert len(inflate(M, 0.15)) == 9


@pytest.mark.parametrize("name", sorted(catalog()))
def test_resolution_convergence(name):
    s = catalog()[name]
    coarse, _ = minimal_invariant_set(s, Grid.for_scenario(s, 0.02 if name != "affine_strong" else 0.01), 5)
    fine, _ = minimal_invariant_set(s, Grid.for_scenario(s, coarse.grid.h / 2), 5)
    d = hausdorff_distance(boxset_boundary_points(coarse), boxset_boundary_points(fine))
    assert d <= 2 * coarse.grid.h


def test_grid_and_boxset_basics():
    with pytest.raises(ValueError):
        Grid((0, 0), (1, 1), 0.3)
    g = Grid((0, 0), (1, 1), 0.25)
    assert g.shape == (4, 4)
    assert np.allclose(g.centers([[0, 0], [3, 3]]), [[0.125, 0.125], [0.875, 0.875]])
    A = BoxSet.from_points(g, [[0.1, 0.1], [0.9, 0.9]])
    assert len(A) == 2 and (0, 0) in A and A.issubset(BoxSet(g, np.ones((4, 4))))
    with pytest.raises(ValueError):
        image_boxset(BoxSet.empty(g), catalog()["affine"])
