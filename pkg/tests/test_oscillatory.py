import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from near_misses.counting import BumpWeight
from near_misses.duality import dual_geometry, legendre_dual
from near_misses.errors import InvalidQueryError, OutsideDualDomain
from near_misses.oscillatory import (
    KClass,
    OscillatoryQuery,
    classify_k,
    critical_point,
    default_weight,
    integral_quadrature,
    k_class_counts,
    nonstationary_decay,
    poisson_check,
    quadrature_report,
    stationary_phase_approx,
    stationary_phase_sweep,
)
from near_misses.surfaces import Domain, curvature_window, get_surface, parabola, paraboloid, polynomial_chart

from oracles import parabola_integral

# mpmath at 30 digits on 40 panels (see oracles.parabola_integral); frozen
PARABOLA_J2_K1_Q100 = 2.5972059168954946e-4 + 4.5828558170076485e-5j

SWEEP_QS = [round(10**e) for e in (2, 2.5, 3, 3.5, 4)]


@pytest.fixture(scope="module")
def disc():
    """Paraboloid on (-0.8, 0.8)^2 with a bump of radius 0.3 at 0: V is the disc of radius 0.3."""
    ch = paraboloid(3, lo=-0.8, hi=0.8)
    w = BumpWeight((0.0, 0.0), 0.3)
    return ch, w, dual_geometry(ch, w)


# ---------------------------------------------------------------------------
# quadrature


def test_zero_phase_gives_weight_mass():
    flat = polynomial_chart("zero", {(0,): Fraction(0)}, Domain.box([0], [1]))
    w = BumpWeight((0.5,), 0.25)
    val = integral_quadrature(OscillatoryQuery(flat, 1, (0,), 7, w))
    assert val.real == pytest.approx(w.w_hat_zero, abs=1e-12)
    assert val.imag == 0.0


def test_paraboloid_self_refinement():
    ch = get_surface("paraboloid2")
    coarse = quadrature_report(OscillatoryQuery(ch, 1, (0,), 50, quad_tol=1e-10))
    fine = quadrature_report(OscillatoryQuery(ch, 1, (0,), 50, quad_tol=1e-13))
    assert fine.n_points >= coarse.n_points
    assert abs(coarse.value - fine.value) <= 1e-8
    assert coarse.error <= 1e-10


def test_parabola_against_high_precision():
    ch = parabola(0, 1, closed=False)
    val = integral_quadrature(OscillatoryQuery(ch, 2, (1,), 100, quad_tol=1e-13))
    assert abs(val - PARABOLA_J2_K1_Q100) <= 1e-14


@pytest.mark.slow
def test_parabola_oracle_value_is_reproducible():
    assert abs(parabola_integral(2, 1, 100) - PARABOLA_J2_K1_Q100) <= 1e-18


def test_zero_weight_gives_zero():
    ch = paraboloid(3, lo=-0.8, hi=0.8)
    w = BumpWeight((0.0, 0.0), 0.3)
    zero = type("Zero", (), {"support_box": w.support_box, "__call__": lambda self, x: np.zeros(len(x)),
                             "w_hat_zero": 0.0})()
    assert integral_quadrature(OscillatoryQuery(ch, 3, (1, 2), 5, zero)) == 0


@pytest.mark.parametrize(
    "kw, msg",
    [
        (dict(j=0), "j"),
        (dict(q=0), "q"),
        (dict(quad_tol=0.1), "quad_tol"),
        (dict(j=5, J=4), "exceeds"),
        (dict(k=(1, 2, 3)), "components"),
    ],
)
def test_query_validation(kw, msg):
    args = dict(chart=get_surface("paraboloid3"), j=1, k=(0, 0), q=1)
    args.update(kw)
    with pytest.raises(InvalidQueryError, match=msg):
        OscillatoryQuery(**args).validate()


# ---------------------------------------------------------------------------
# frequency classes


def test_classification_examples(disc):
    _, _, g = disc
    assert classify_k(10, (1, 1), g) is KClass.K1
    assert classify_k(10, (100, 0), g) is KClass.K2


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.301, 0.449), t=st.floats(0, 2 * math.pi))
def test_boundary_shell_is_k3(disc, r, t):
    # V is the disc of radius 0.3 and rho = 0.25 (see the duality tests); scale
    # k/j = r e^{it} by a large j so the rounded k stays inside the shell
    _, _, g = disc
    j = 1000
    k = (round(j * r * math.cos(t)), round(j * r * math.sin(t)))
    d = math.hypot(*k) / j - 0.3
    if 1e-3 < d < 0.25 - 1e-3:
        assert classify_k(j, k, g) is KClass.K3


def test_classes_partition(disc):
    _, _, g = disc
    j = 8
    seen = {c: 0 for c in KClass}
    for a in range(-8, 9):
        for b in range(-8, 9):
            seen[classify_k(j, (a, b), g)] += 1
    assert sum(seen.values()) == 17 * 17
    kc = k_class_counts(g, j)
    assert (kc.k1, kc.k3) == (seen[KClass.K1], seen[KClass.K3])


def test_class_constants_are_stable(disc):
    _, _, g = disc
    c = [k_class_counts(g, j) for j in (4, 8, 16, 32, 64)]
    c1 = [r.c1 + r.c3 for r in c]
    # |K1 u K3| / j^2 tends to the area of the (rho-)enlarged disc, pi 0.55^2
    assert max(c1) / min(c1) <= 1.6
    assert c1[-1] == pytest.approx(math.pi * 0.55**2, rel=0.1)


# ---------------------------------------------------------------------------
# critical points and stationary phase


@settings(max_examples=30, deadline=None)
@given(j=st.integers(1, 20), a=st.integers(-5, 5), b=st.integers(-5, 5))
def test_paraboloid_critical_point_is_k_over_j(j, a, b):
    assume(max(abs(a), abs(b)) < 0.8 * j)
    ch = paraboloid(3, lo=-0.8, hi=0.8)
    cp = critical_point(ch, j, (a, b))
    assert np.allclose(cp.x, np.array([a, b]) / j, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(j=st.integers(1, 20), k=st.integers(1, 30))
def test_parabola_critical_point_and_phase(j, k):
    ch = parabola(0, 1, closed=False)
    assume(k < 2 * j)
    cp = critical_point(ch, j, (k,))
    assert cp.x[0] == pytest.approx(k / (2 * j), abs=1e-13)
    # j f(x*) - k x* = -k^2/(4j) = -j f*(k/j)
    assert cp.phase == pytest.approx(-k * k / (4 * j), abs=1e-12)
    assert cp.phase == pytest.approx(-j * legendre_dual(ch).f(np.array([[k / j]]))[0], abs=1e-12)


def test_critical_point_outside_image():
    with pytest.raises(OutsideDualDomain):
        critical_point(parabola(0, 1, closed=False), 1, (5,))


def test_leading_term_vanishes_off_support(disc):
    ch, w, g = disc
    # k/j = (0.35, 0) lies in the shell, outside the support of w
    res = stationary_phase_approx(OscillatoryQuery(ch, 20, (7, 0), 3, w), geometry=g)
    assert res.k_class is KClass.K3
    assert res.leading == 0


def test_leading_magnitude_at_centre():
    ch = paraboloid(3, lo=-0.5, hi=0.5)
    w = BumpWeight((0.0, 0.0), 0.2)
    for q in (3, 20, 77):
        res = stationary_phase_approx(OscillatoryQuery(ch, 1, (0, 0), q, w), quadrature=False)
        assert res.Delta == pytest.approx(1.0, abs=1e-14)
        assert abs(res.leading) == pytest.approx(math.exp(-1) / q, rel=1e-14)


def test_k2_is_refused(disc):
    ch, w, g = disc
    with pytest.raises(InvalidQueryError):
        stationary_phase_approx(OscillatoryQuery(ch, 10, (100, 0), 1, w), geometry=g)


@pytest.mark.parametrize("name", ["parabola", "paraboloid2", "sphere2", "fermat4", "paraboloid3", "sphere3"])
def test_signature_and_delta(name):
    ch = get_surface(name)
    j = 64
    y = np.asarray(ch.grad(np.array([ch.domain.center]))).reshape(-1)
    k = tuple(int(round(v)) for v in j * y)
    res = stationary_phase_approx(OscillatoryQuery(ch, j, k, 1), quadrature=False)
    H = np.asarray(ch.hess(res.critical_point)).reshape(ch.dim, ch.dim)
    # convex charts have sigma = n - 1, the concave sphere caps and Fermat curve -(n - 1)
    expected = ch.dim if np.all(np.linalg.eigvalsh(H) > 0) else -ch.dim
    assert res.sigma == expected
    assert (expected > 0) == name.startswith("parab")
    # an odd grid contains the centre, where the critical point sits
    cw = curvature_window(ch, 101 if ch.dim == 1 else 21)
    assert cw.c1 * (1 - 1e-9) <= res.Delta <= cw.c2 * (1 + 1e-9)


@pytest.mark.parametrize("name, j, k", [("parabola", 1, (1,)), ("paraboloid2", 2, (1,)), ("sphere2", 1, (0,))])
def test_stationary_phase_slope_curves(name, j, k):
    rep = stationary_phase_sweep(get_surface(name), j, k, [max(1, q // j) for q in SWEEP_QS])
    assert rep.expected == -1.5
    assert rep.within, rep.slope


def test_stationary_phase_slope_surface():
    rep = stationary_phase_sweep(get_surface("paraboloid3"), 2, (1, 1), [q // 2 for q in SWEEP_QS])
    assert rep.expected == -2.0
    assert rep.within, rep.slope


# ---------------------------------------------------------------------------
# non-stationary decay


def test_far_frequency_is_below_double_precision(disc):
    ch, w, g = disc
    rep = nonstationary_decay(ch, 10, (100, 0), [50, 100, 200, 400, 800], w, g)
    assert rep.resolved == 0
    assert rep.slope == -math.inf


def test_resolved_decay_rate(disc):
    ch, w, g = disc
    rep = nonstationary_decay(ch, 10, (10, 0), [1, 2, 3, 4, 6, 8, 10], w, g)
    assert rep.resolved == 7
    assert rep.slope <= -4


def test_decay_q16_below_q1(disc):
    ch, w, _ = disc
    for k in [(10, 0), (6, 6), (100, 0)]:
        i1 = abs(integral_quadrature(OscillatoryQuery(ch, 10, k, 1, w)))
        i16 = abs(integral_quadrature(OscillatoryQuery(ch, 10, k, 16, w)))
        assert i16 <= i1


def test_decay_needs_k2(disc):
    ch, w, g = disc
    with pytest.raises(InvalidQueryError):
        nonstationary_decay(ch, 10, (1, 1), [1, 2], w, g)


# ---------------------------------------------------------------------------
# Poisson summation


@pytest.mark.parametrize("name", ["parabola", "paraboloid2", "sphere2", "fermat4"])
@pytest.mark.parametrize("j, q", [(1, 1), (1, 7), (3, 17), (8, 30)])
def test_poisson_identity_curves(name, j, q):
    r = poisson_check(get_surface(name), j, q)
    assert r.residual <= 1e-6


@pytest.mark.parametrize("name", ["paraboloid3", "sphere3", "rs"])
def test_poisson_identity_surfaces(name):
    r = poisson_check(get_surface(name), 5, 11)
    assert r.residual <= 1e-6
    assert r.tail_estimate <= 1e-6


def test_poisson_lattice_side_is_direct_sum():
    ch = parabola(0, 1, closed=False)
    w = default_weight(ch)
    q, j = 13, 2
    direct = sum(w(np.array([[a / q]]))[0] * np.exp(2j * np.pi * j * a * a / q) for a in range(q + 1))
    assert abs(poisson_check(ch, j, q).lattice_sum - direct) <= 1e-14
