import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from near_misses.counting import BumpWeight
from near_misses.duality import (
    dual_geometry,
    dual_residuals,
    grad_inverse,
    grad_inverse_many,
    legendre_dual,
)
from near_misses.errors import CurvatureError, DegenerateGeometryError, OutsideDualDomain
from near_misses.oscillatory import default_weight
from near_misses.surfaces import (
    Domain,
    catalog,
    fermat_curve,
    get_surface,
    parabola,
    paraboloid,
    polynomial_chart,
    sphere_patch,
)

ALL = sorted(catalog())


# ---------------------------------------------------------------------------
# gradient inversion


@settings(max_examples=30, deadline=None)
@given(st.floats(0.15, 0.85), st.floats(0.15, 0.85))
def test_paraboloid_gradient_inverse_is_identity(a, b):
    x = grad_inverse(paraboloid(3), np.array([a, b]))
    assert np.allclose(x, [a, b], atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 1.99))
def test_parabola_gradient_inverse_halves(y):
    assert grad_inverse(parabola(), np.array([y]))[0] == pytest.approx(y / 2, abs=1e-13)


def test_sphere_round_trip():
    ch = sphere_patch(3)
    y = ch.grad([0.3, 0.4])
    assert np.max(np.abs(grad_inverse(ch, y) - [0.3, 0.4])) <= 1e-10


def test_gradient_inverse_outside_image():
    with pytest.raises(OutsideDualDomain):
        grad_inverse(paraboloid(3), np.array([5.0, 0.5]))


def test_batch_flags_nonconvergence():
    xs, ok = grad_inverse_many(parabola(), np.array([[0.5], [3.0], [1.2]]))
    assert ok.tolist() == [True, False, True]
    assert xs[0, 0] == pytest.approx(0.25) and xs[2, 0] == pytest.approx(0.6)


@settings(max_examples=30, deadline=None)
@given(name=st.sampled_from(ALL), seed=st.integers(0, 10**6))
def test_random_round_trip(name, seed):
    ch = get_surface(name)
    pts = ch.sample_grid(30)
    x = pts[np.random.default_rng(seed).integers(len(pts))]
    assert np.max(np.abs(grad_inverse(ch, ch.grad(x)) - x)) <= 1e-9


# ---------------------------------------------------------------------------
# the dual function


def test_paraboloid_is_self_dual():
    dual = legendre_dual(paraboloid(3))
    y = paraboloid(3).sample_grid(9)
    assert np.allclose(dual.f(y), 0.5 * np.sum(y * y, axis=1), atol=1e-13)
    assert np.allclose(dual.hess(y), np.eye(2), atol=1e-13)


def test_parabola_dual_is_quarter_square():
    # f*(y) = y (y/2) - (y/2)^2 = y^2/4
    dual = legendre_dual(parabola())
    y = np.linspace(0.05, 1.95, 41)[:, None]
    assert np.allclose(dual.f(y), y[:, 0] ** 2 / 4, atol=1e-13)


def test_rs_double_dual():
    ch = get_surface("rs")
    r = dual_residuals(ch, 10)
    assert r.n_points >= 100
    assert r.involution <= 1e-9


def test_dual_curvature_window_is_reciprocal():
    ch = get_surface("sphere3")
    dual = legendre_dual(ch)
    from near_misses.surfaces import curvature_window

    cw = curvature_window(ch)
    assert dual.curvature_window == pytest.approx((1 / cw.c2, 1 / cw.c1))


def test_dual_rejects_flat_chart():
    flat = polynomial_chart("line", {(1,): Fraction(1)}, Domain.box([0], [1]))
    with pytest.raises(CurvatureError):
        legendre_dual(flat)


def test_dual_outside_domain():
    dual = legendre_dual(parabola())
    with pytest.raises(OutsideDualDomain):
        dual.f(np.array([[2.5]]))


@pytest.mark.parametrize("name", ALL)
def test_duality_identities(name):
    r = dual_residuals(get_surface(name))
    assert r.n_points >= 100
    assert r.involution <= 1e-9
    assert r.round_trip <= 1e-9
    assert r.legendre_identity <= 1e-9
    assert r.hessian_reciprocity <= 1e-6
    assert r.signature_constant


def test_signature_of_concave_dual():
    # the sphere cap is concave: its dual Hessian is negative definite everywhere
    ch = get_surface("sphere3")
    dual = legendre_dual(ch)
    ev = np.linalg.eigvalsh(dual.hess(dual.sample_grid(8)))
    assert np.all(ev < 0)


# ---------------------------------------------------------------------------
# V, R and rho


def test_paraboloid_geometry():
    ch = paraboloid(3, lo=-0.8, hi=0.8)
    g = dual_geometry(ch, BumpWeight((0.0, 0.0), 0.3))
    assert g.rho == pytest.approx(0.25, abs=1e-6)
    ys = np.array([[0.29, 0.0], [0.0, -0.2], [0.31, 0.0], [0.25, 0.25]])
    assert g.in_V(ys).tolist() == [True, True, False, False]
    assert g.dist_to_V(np.array([[0.5, 0.0]]))[0] == pytest.approx(0.2, abs=1e-5)


def test_parabola_geometry():
    ch = parabola(0, 1, closed=False)
    g = dual_geometry(ch, BumpWeight((0.5,), 0.3))
    assert sorted(g.V_boundary[:, 0]) == pytest.approx([0.4, 1.6])
    assert sorted(g.R_boundary[:, 0]) == pytest.approx([0.0, 2.0])
    assert g.rho == pytest.approx(0.2)


def test_sphere_rho_closed_form():
    # grad f is radial, s -> s / sqrt(1 - s^2), so V and R are discs
    ch = sphere_patch(3)
    w = default_weight(ch)
    g = dual_geometry(ch, w)
    radial = lambda s: s / math.sqrt(1 - s * s)
    expected = 0.5 * (radial(0.95) - radial(w.radius))
    assert g.rho == pytest.approx(expected, rel=1e-5)


def test_geometry_needs_interior_support():
    with pytest.raises(DegenerateGeometryError):
        dual_geometry(paraboloid(3), BumpWeight((0.5, 0.5), 0.45))
