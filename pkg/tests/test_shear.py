"""Shear map laws: inversion, volume, plane preservation, derivative checks."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lyapshear.shear import ShearMap, TorusPoint, wrap01, wrap_delta

RNG = np.random.default_rng(20240817)


def random_points(n, d):
    return RNG.random((n, d))


def test_wrap01_range_and_clamp():
    x = np.array([0.0, 0.25, -0.25, 1.0, 2.75, -3.5, 1.0 - 5e-16])
    w = wrap01(x)
    assert np.all((w >= 0) & (w < 1))
    assert w[3] == 0.0
    assert w[6] == 0.0
    assert w[2] == 0.75


@given(st.floats(-1e6, 1e6, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_wrap01_idempotent(x):
    once = wrap01(np.array([x]))
    twice = wrap01(once)
    assert np.all(once == twice)
    assert 0 <= once[0] < 1


def test_torus_point_reduces():
    p = TorusPoint([1.25, -0.5, 3.0])
    assert np.allclose(p.coords, [0.25, 0.5, 0.0])
    assert p.dim == 3


@pytest.mark.parametrize("t", [0.0, 0.7, 5.86, -2.3])
def test_inverse_roundtrip(t):
    f = ShearMap(t, (0.35689,))
    pts = random_points(64, 3)
    back = f.inverse().apply(f.apply(pts))
    assert np.max(np.abs(wrap_delta(back - pts))) < 1e-12


def test_first_coordinate_fixed():
    f = ShearMap(4.2, (0.8, 0.3))
    pts = random_points(32, 4)
    out = f.apply(pts)
    assert np.allclose(out[:, 0], pts[:, 0])


def test_translation_along_direction():
    t = 2.5
    f = ShearMap(t, (0.4,))
    pts = random_points(16, 3)
    out = f.apply(pts)
    s = t * np.sin(2 * np.pi * pts[:, 0])
    expect = wrap01(pts + s[:, None] * np.array([0.0, 1.0, 0.4]))
    assert np.max(np.abs(wrap_delta(out - expect))) < 1e-12


def test_derivative_determinant_one():
    f = ShearMap(7.0, (0.9,))
    jets = f.jet(random_points(50, 3))
    dets = np.linalg.det(jets.derivative)
    assert np.max(np.abs(dets - 1.0)) < 1e-12


def test_derivative_fixes_direction_and_shears_transverse():
    # D f (b_bar) = b_bar and D f (v) = v + 2 pi t cos(2 pi x) v_x b_bar
    t = 3.1
    f = ShearMap(t, (0.5,))
    p = np.array([0.123, 0.4, 0.9])
    deriv = f.jet(p).derivative
    b = f.direction
    assert np.allclose(deriv @ b, b, atol=1e-14)
    v = np.array([1.0, 0.0, 0.80194])
    got = deriv @ v
    want = v + 2 * np.pi * t * np.cos(2 * np.pi * p[0]) * b
    assert np.allclose(got, want, atol=1e-12)


def test_preserves_planes_parallel_to_span():
    a_bar = np.array([1.0, 0.0, 0.80194])
    b_bar = np.array([0.0, 1.0, 0.35689])
    t = 5.86
    f = ShearMap(t, (0.35689,))
    basis = np.stack([a_bar, b_bar], axis=1)

    def lift(q):
        return q + t * np.sin(2 * np.pi * q[0]) * f.direction

    for p in random_points(20, 3):
        w = basis @ RNG.normal(size=2)
        # the lift agrees with the torus map after reduction
        assert np.max(np.abs(wrap_delta(wrap01(lift(p)) - f.apply(p)))) < 1e-12
        # displacement of the lifted image pair stays inside the plane
        moved = lift(p + w) - lift(p)
        coords, *_ = np.linalg.lstsq(basis, moved, rcond=None)
        assert np.linalg.norm(basis @ coords - moved) < 1e-9


def test_area_preserved_on_invariant_planes():
    # in (a_bar, b_bar) coordinates the restriction is (r, s) -> (r, s + g(r)),
    # an area-preserving plane map; check the 2x2 Jacobian determinant by
    # finite differences
    a_bar = np.array([1.0, 0.0, 0.80194])
    b_bar = np.array([0.0, 1.0, 0.35689])
    basis = np.stack([a_bar, b_bar], axis=1)
    f = ShearMap(2.7, (0.35689,))
    p0 = np.array([0.3, 0.55, 0.11])
    h = 1e-6

    def plane_map(rs):
        q = p0 + basis @ rs
        img = f.apply(q) - f.apply(p0)
        coords, *_ = np.linalg.lstsq(basis, wrap_delta(img), rcond=None)
        return coords

    jac = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        jac[:, j] = (plane_map(e) - plane_map(-e)) / (2 * h)
    assert abs(np.linalg.det(jac) - 1.0) < 1e-6


@pytest.mark.parametrize("t", [1.0, 4.0, 16.0, 64.0])
def test_norm_bounds_linear_in_t(t):
    f = ShearMap(t, (0.35689,))
    xs = np.linspace(0, 1, 2001)[:, None] * np.array([1.0, 0, 0]) + [0, 0.5, 0.5]
    derivs = f.jet(xs).derivative
    norms = np.linalg.norm(derivs, ord=2, axis=(1, 2))
    inv_norms = np.linalg.norm(f.inverse().jet(xs).derivative, ord=2, axis=(1, 2))
    sup = norms.max()
    sup_inv = inv_norms.max()
    lo = 2 * np.pi * t * 0.9
    hi = 2 * np.pi * t * np.linalg.norm(f.direction) + 2
    assert lo <= sup <= hi
    assert lo <= sup_inv <= hi


def test_finite_difference_check_small():
    f = ShearMap(5.86, (0.35689,))
    for p in random_points(10, 3):
        assert f.finite_difference_check(p) <= 1e-8


def test_finite_difference_check_dim4():
    f = ShearMap(3.3, (0.856, 0.233))
    for p in random_points(5, 4):
        assert f.finite_difference_check(p) <= 1e-8


def test_phase_shifts_sine_argument():
    f0 = ShearMap(2.0, (0.4,), phase=0.0)
    fh = ShearMap(2.0, (0.4,), phase=0.5)
    pts = random_points(8, 3)
    # sin(2 pi (x + 1/2)) = -sin(2 pi x): half phase flips the translation
    out_h = fh.apply(pts)
    out_neg = ShearMap(-2.0, (0.4,)).apply(pts)
    assert np.max(np.abs(wrap_delta(out_h - out_neg))) < 1e-12
