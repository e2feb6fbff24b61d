"""Oscillatory integrals ``I(j, k; q) = int w(x) e(q (j f(x) - k.x)) dx``.

``e(x) = exp(2 pi i x)`` throughout.  The integrand is smooth and compactly
supported, so the trapezoid rule on a uniform grid over the support box is
spectrally accurate once the grid step resolves the largest local frequency
of the integrand.  Refinement halves the step until two successive
estimates agree to the requested tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .counting import BumpWeight
from .duality import DualGeometry, dual_geometry, grad_inverse, legendre_dual
from .errors import AccuracyError, InvalidQueryError, OutsideDualDomain

__all__ = [
    "OscillatoryQuery",
    "KClass",
    "QuadratureResult",
    "StationaryPhaseResult",
    "CriticalPoint",
    "default_weight",
    "integral_quadrature",
    "quadrature_report",
    "dual_integrals",
    "classify_k",
    "k_class_counts",
    "critical_point",
    "stationary_phase_approx",
    "stationary_phase_sweep",
    "nonstationary_decay",
    "PoissonReport",
    "poisson_check",
]

TWO_PI = 2.0 * math.pi
# spectral margin of the bump weight: its transform is below 1e-15 beyond 100/r
_BUMP_MARGIN = 100.0
_CHUNK = 1 << 20


def default_weight(chart) -> BumpWeight:
    """Bump centred in the domain with half the inradius."""
    D = chart.domain
    return BumpWeight(tuple(D.center), 0.5 * D.inradius)


@dataclass
class OscillatoryQuery:
    chart: object
    j: int
    k: tuple
    q: int
    weight: object = None
    quad_tol: float = 1e-10
    J: Optional[int] = None

    def __post_init__(self):
        self.k = tuple(int(v) for v in np.atleast_1d(self.k))
        if self.weight is None:
            self.weight = default_weight(self.chart)

    def validate(self):
        if int(self.j) != self.j or self.j < 1:
            raise InvalidQueryError("j must be a positive integer")
        if int(self.q) != self.q or self.q < 1:
            raise InvalidQueryError("q must be a positive integer")
        if self.J is not None and self.j > self.J:
            raise InvalidQueryError(f"j={self.j} exceeds J={self.J}")
        if not 0 < self.quad_tol <= 1e-3:
            raise InvalidQueryError("quad_tol must lie in (0, 1e-3]")
        if len(self.k) != self.chart.dim:
            raise InvalidQueryError(f"k must have {self.chart.dim} components")
        return self


class KClass(enum.Enum):
    K1 = "K1"  # k/j inside V
    K2 = "K2"  # far outside: dist(k/j, V) >= rho
    K3 = "K3"  # boundary shell


@dataclass
class QuadratureResult:
    value: complex
    error: float
    step: float
    n_points: int


def _support(w):
    lo, hi = w.support_box()
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def _support_scale(w):
    lo, hi = _support(w)
    return float(np.min(hi - lo)) / 2.0


def _max_frequency(chart, w, j, ks):
    """Upper bound for ``max |j grad f(x) - k|`` over the support and ``ks``."""
    lo, hi = _support(w)
    d = len(lo)
    axes = [np.linspace(a, b, 41) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    pts = pts[w(pts) > 0]
    if len(pts) == 0:
        return 0.0
    g = j * np.asarray(chart.grad(pts)).reshape(-1, d)
    ks = np.asarray(ks, dtype=float).reshape(-1, d)
    best = 0.0
    for k in ks:
        best = max(best, float(np.max(np.linalg.norm(g - k, axis=1))))
    # grid sampling of the gradient can miss the extreme slightly
    return 1.1 * best + 1e-12


def _grid_axes(w, h):
    lo, hi = _support(w)
    n = np.maximum(np.ceil((hi - lo) / h).astype(int), 2)
    steps = (hi - lo) / n
    return [lo[i] + steps[i] * np.arange(n[i] + 1) for i in range(len(lo))], steps


def _phase_sums(chart, w, j, k, q, axes):
    """Sums of the integrand over the fine grid and over its even sublattice."""
    d = len(axes)
    k = np.asarray(k, dtype=float)
    shape = [len(a) for a in axes]
    rest = int(np.prod(shape[1:])) if d > 1 else 1
    rows = max(1, _CHUNK // rest)
    parts_all = []
    parts_even = []
    n_eval = 0
    for s in range(0, shape[0], rows):
        sub = [axes[0][s:s + rows]] + list(axes[1:])
        idx = [np.arange(s, min(s + rows, shape[0]))] + [np.arange(n) for n in shape[1:]]
        mesh = np.meshgrid(*sub, indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, d)
        imesh = np.meshgrid(*idx, indexing="ij")
        even = np.all(np.stack([(m.ravel() % 2) == 0 for m in imesh]), axis=0)
        wv = w(pts)
        m = wv > 0
        if not m.any():
            continue
        p = pts[m]
        ph = q * (j * np.asarray(chart.f(p), dtype=float).reshape(-1) - p @ k)
        ph -= np.round(ph)
        val = wv[m] * np.exp(1j * TWO_PI * ph)
        n_eval += len(p)
        parts_all.append(np.sum(val))
        parts_even.append(np.sum(val[even[m]]))
    s_all = complex(math.fsum(v.real for v in parts_all), math.fsum(v.imag for v in parts_all))
    s_even = complex(math.fsum(v.real for v in parts_even), math.fsum(v.imag for v in parts_even))
    return s_all, s_even, n_eval


def quadrature_report(query: OscillatoryQuery, max_points: float = 4e8) -> QuadratureResult:
    """Trapezoid quadrature with step halving; returns value and error estimate."""
    query.validate()
    chart, w, j, q = query.chart, query.weight, query.j, query.q
    F = q * _max_frequency(chart, w, j, [query.k])
    h = 1.0 / (F + _BUMP_MARGIN / _support_scale(w))
    best = None
    while True:
        # fine grid at h/2; the even sublattice is the grid at h
        axes, steps = _grid_axes(w, h / 2)
        npts = int(np.prod([len(a) for a in axes]))
        if npts > max_points:
            if best is None:
                raise AccuracyError(f"grid of {npts} points exceeds the budget", None, None)
            raise AccuracyError(
                f"refinement budget exhausted (error estimate {best.error:.3g})",
                best.value, best.error,
            )
        s_all, s_even, _ = _phase_sums(chart, w, j, query.k, q, axes)
        vol = float(np.prod(steps))
        fine = vol * s_all
        coarse = (2 ** len(axes)) * vol * s_even
        err = abs(fine - coarse)
        best = QuadratureResult(fine, err, float(np.max(steps)), npts)
        if err <= query.quad_tol:
            return best
        h /= 2


def integral_quadrature(query: OscillatoryQuery) -> complex:
    """Value of ``I(j, k; q)`` to absolute tolerance ``query.quad_tol``."""
    return quadrature_report(query).value


def dual_integrals(chart, w, j, q, k_axes: Sequence[np.ndarray], tol=1e-12,
                   max_points=2e8):
    """``I(j, k; q)`` for every ``k`` on a tensor grid of integer frequencies.

    Uses the separable structure of ``e(-q k.x)`` on the quadrature grid:
    in two variables the table is ``E1 G E2^T`` with ``G`` the sampled
    integrand without the linear phase.  Returns ``(table, error)``.
    """
    d = chart.dim
    if len(k_axes) != d or d > 2:
        raise NotImplementedError("batched integrals are implemented for n <= 3")
    k_axes = [np.asarray(a, dtype=float) for a in k_axes]
    corners = np.stack(np.meshgrid(*[[a.min(), a.max()] for a in k_axes], indexing="ij"),
                       axis=-1).reshape(-1, d)
    lo, hi = _support(w)
    # the extreme |j grad f - k| over a box of k is attained at a corner
    F = q * _max_frequency(chart, w, j, corners)
    h = 1.0 / (F + _BUMP_MARGIN / _support_scale(w))
    while True:
        axes, steps = _grid_axes(w, h / 2)
        npts = int(np.prod([len(a) for a in axes]))
        if npts > max_points:
            raise AccuracyError("batched quadrature budget exhausted")
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        wv = w(mesh)
        G = np.zeros(len(mesh), dtype=complex)
        m = wv > 0
        ph = q * j * np.asarray(chart.f(mesh[m]), dtype=float).reshape(-1)
        ph -= np.round(ph)
        G[m] = wv[m] * np.exp(1j * TWO_PI * ph)
        G = G.reshape([len(a) for a in axes])
        E = []
        for ka, xa in zip(k_axes, axes):
            ph = q * np.outer(ka, xa)
            ph -= np.round(ph)
            E.append(np.exp(-1j * TWO_PI * ph))
        vol = float(np.prod(steps))
        if d == 1:
            fine = vol * (E[0] @ G)
            coarse = 2 * vol * (E[0][:, ::2] @ G[::2])
        else:
            fine = vol * (E[0] @ G @ E[1].T)
            coarse = 4 * vol * (E[0][:, ::2] @ G[::2, ::2] @ E[1][:, ::2].T)
        err = float(np.max(np.abs(fine - coarse)))
        if err <= tol:
            return fine, err
        h /= 2


# ---------------------------------------------------------------------------
# Frequency classes


def classify_k(j, k, geometry: DualGeometry) -> KClass:
    y = np.asarray(k, dtype=float).reshape(1, -1) / j
    if geometry.in_V(y)[0]:
        return KClass.K1
    if geometry.dist_to_V(y)[0] >= geometry.rho:
        return KClass.K2
    return KClass.K3


@dataclass
class KClassCounts:
    j: int
    k1: int
    k3: int
    c1: float
    c3: float


def k_class_counts(geometry: DualGeometry, j: int) -> KClassCounts:
    """Sizes of the interior and shell classes for one ``j``, with ``|K|/j^d``."""
    lo, hi = geometry.V_box
    rho = geometry.rho
    d = geometry.dim
    ranges = [np.arange(math.floor(j * (a - rho)), math.ceil(j * (b + rho)) + 1)
              for a, b in zip(lo, hi)]
    ks = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d)
    ys = ks / j
    dist = geometry.dist_to_V(ys)
    inside = geometry.in_V(ys)
    k1 = int(np.sum(inside))
    k3 = int(np.sum(~inside & (dist < rho)))
    return KClassCounts(j, k1, k3, k1 / j**d, k3 / j**d)


# ---------------------------------------------------------------------------
# Stationary phase


@dataclass
class CriticalPoint:
    x: np.ndarray
    phase: float  # j f(x) - k.x
    f_star: float  # f*(k/j); phase == -j f_star
    gradient_residual: float


def critical_point(chart, j, k, dual=None) -> CriticalPoint:
    """Critical point of ``j f(x) - k.x`` and the phase value there."""
    k = np.asarray(k, dtype=float).reshape(-1)
    y = k / j
    x = grad_inverse(chart, y)
    res = float(np.max(np.abs(j * np.asarray(chart.grad(x)).reshape(-1) - k)))
    if res > 1e-9 * max(1.0, j):
        raise OutsideDualDomain(f"critical point residual {res:.3g} too large")
    phase = float(j * chart.f(x) - k @ x)
    fs = float(y @ x - chart.f(x))
    return CriticalPoint(x, phase, fs, res)


@dataclass
class StationaryPhaseResult:
    value: Optional[complex]
    critical_point: np.ndarray
    sigma: int
    Delta: float
    leading: complex
    k_class: Optional[KClass]
    err_bound_exponent: float
    correction_scale: float
    quad_error: Optional[float] = None


def stationary_phase_approx(query: OscillatoryQuery, geometry: Optional[DualGeometry] = None,
                            quadrature: bool = True) -> StationaryPhaseResult:
    """Leading stationary-phase term, optionally with the quadrature value.

    ``leading = w(x0) Delta^(-1/2) (qj)^(-d/2) e(-qj f*(k/j) + sigma/8)``
    where ``x0`` solves ``j grad f(x0) = k``.
    """
    query.validate()
    chart, w, j, q = query.chart, query.weight, query.j, query.q
    d = chart.dim
    cls = None
    if geometry is not None:
        cls = classify_k(j, query.k, geometry)
        if cls is KClass.K2:
            raise InvalidQueryError("stationary phase needs a K1 or K3 frequency")
    lam = q * j
    if lam < 1:
        raise InvalidQueryError("q*j must be at least 1")
    cp = critical_point(chart, j, query.k)
    x0 = cp.x
    H = np.asarray(chart.hess(x0)).reshape(d, d)
    ev = np.linalg.eigvalsh(H)
    sigma = int(np.sum(ev > 0) - np.sum(ev < 0))
    Delta = float(abs(np.linalg.det(H)))
    phase = -lam * cp.f_star + sigma / 8.0
    phase -= round(phase)
    amp = float(w(x0.reshape(1, -1))[0]) / math.sqrt(Delta) * lam ** (-d / 2)
    leading = amp * complex(math.cos(TWO_PI * phase), math.sin(TWO_PI * phase))
    value = err = None
    if quadrature:
        rep = quadrature_report(query)
        value, err = rep.value, rep.error
    n = d + 1
    return StationaryPhaseResult(value, x0, sigma, Delta, leading, cls,
                                 -(n + 1) / 2, lam ** (-(n + 1) / 2), err)


@dataclass
class SlopeReport:
    lambdas: list
    errors: list
    slope: float
    intercept: float
    expected: float
    resolved: int

    @property
    def within(self):
        return abs(self.slope - self.expected) <= 0.3


def stationary_phase_sweep(chart, j, k, qs, weight=None, quad_tol=1e-13) -> SlopeReport:
    """Log-log slope of ``|I - leading|`` against ``lambda = q j``."""
    lams, errs = [], []
    for q in qs:
        res = stationary_phase_approx(OscillatoryQuery(chart, j, k, q, weight, quad_tol))
        lams.append(q * j)
        errs.append(abs(res.value - res.leading))
    fit = stats.linregress(np.log(lams), np.log(errs))
    return SlopeReport(lams, errs, float(fit.slope), float(fit.intercept),
                       -(chart.dim + 2) / 2, len(lams))


def nonstationary_decay(chart, j, k, qs, weight=None, geometry=None, quad_tol=1e-14,
                        noise_floor=None, max_points=2e7) -> SlopeReport:
    """Fit ``log |I|`` against ``log lambda_1`` with ``lambda_1 = q dist(k, jV)``.

    Values at or below the noise floor (quadrature error plus a multiple of
    the double-precision rounding of ``int |w|``) carry no information about
    the decay rate.  They are excluded from the fit; when fewer than two
    values are resolved the slope is reported as ``-inf``, meaning the decay
    outran double precision.  Queries whose grid would exceed ``max_points``
    are not evaluated and appear as ``nan``.
    """
    w = weight if weight is not None else default_weight(chart)
    geometry = geometry if geometry is not None else dual_geometry(chart, w)
    if classify_k(j, k, geometry) is not KClass.K2:
        raise InvalidQueryError("non-stationary decay needs a K2 frequency")
    dist = float(geometry.dist_to_V(np.asarray(k, dtype=float).reshape(1, -1) / j)[0]) * j
    floor = noise_floor if noise_floor is not None else 1e3 * np.finfo(float).eps * w.w_hat_zero
    lams, vals = [], []
    for q in qs:
        lams.append(q * dist)
        try:
            rep = quadrature_report(OscillatoryQuery(chart, j, k, q, w, quad_tol), max_points)
        except AccuracyError:
            vals.append(math.nan)
            continue
        vals.append(abs(rep.value) if abs(rep.value) > max(floor, rep.error) else 0.0)
    good = [i for i, v in enumerate(vals) if v > 0]
    if len(good) < 2:
        slope, icpt = -math.inf, math.nan
    else:
        fit = stats.linregress(np.log([lams[i] for i in good]), np.log([vals[i] for i in good]))
        slope, icpt = float(fit.slope), float(fit.intercept)
    return SlopeReport(lams, vals, slope, icpt, -4.0, len(good))


# ---------------------------------------------------------------------------
# Poisson summation check


@dataclass
class PoissonReport:
    j: int
    q: int
    lattice_sum: complex
    dual_sum: complex
    residual: float
    truncation: float
    n_frequencies: int
    tail_estimate: float
    quad_error: float


def _lattice_sum(chart, w, j, q):
    lo, hi = _support(w)
    axes = [np.arange(math.floor(q * a), math.ceil(q * b) + 1) for a, b in zip(lo, hi)]
    d = len(axes)
    a = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    x = a / q
    wv = w(x)
    m = wv > 0
    ph = j * q * np.asarray(chart.f(x[m]), dtype=float).reshape(-1)
    ph -= np.round(ph)
    v = wv[m] * np.exp(1j * TWO_PI * ph)
    return complex(math.fsum(v.real), math.fsum(v.imag))


def poisson_check(chart, j, q, weight=None, trunc=None, tail_tol=1e-8,
                  geometry=None, max_doublings=2) -> PoissonReport:
    """Compare ``sum_a w(a/q) e(j q f(a/q))`` with ``q^d sum_k I(j, k; q)``.

    The dual sum keeps the frequencies with ``q dist(k, j B) <= trunc``
    where ``B`` is the bounding box of ``V``; this is a superset of the
    frequencies with ``q dist(k, jV) <= trunc`` and its distance is exact.
    When ``trunc`` is not given it starts at ``40/r`` and doubles until the
    frequencies in the next shell (between ``trunc`` and ``1.5 trunc``)
    contribute less than ``tail_tol`` in total, or ``max_doublings`` is
    reached (at small ``q`` the shell is dominated by quadrature rounding).
    The last shell sum is reported as the tail estimate.
    """
    w = weight if weight is not None else default_weight(chart)
    geometry = geometry if geometry is not None else dual_geometry(chart, w)
    d = chart.dim
    lhs = _lattice_sum(chart, w, j, q)
    Xi = trunc if trunc is not None else 40.0 / _support_scale(w)
    lo, hi = geometry.V_box
    for attempt in range(max_doublings + 1):
        pad = 1.5 * Xi / q
        ranges = [np.arange(math.floor(j * a - pad), math.ceil(j * b + pad) + 1)
                  for a, b in zip(lo, hi)]
        table, qerr = dual_integrals(chart, w, j, q, ranges, tol=1e-13)
        ks = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d)
        gap = np.maximum(np.maximum(j * lo - ks, ks - j * hi), 0.0)
        dist = q * np.linalg.norm(gap, axis=1)
        vals = np.asarray(table).reshape(-1)
        keep = dist <= Xi
        shell = ~keep & (dist <= 1.5 * Xi)
        core = vals[keep]
        tail = vals[shell]
        tail_est = q**d * abs(complex(math.fsum(tail.real), math.fsum(tail.imag)))
        if tail_est <= tail_tol or trunc is not None or attempt == max_doublings:
            break
        Xi *= 2
    rhs = q**d * complex(math.fsum(core.real), math.fsum(core.imag))
    return PoissonReport(j, q, lhs, rhs, abs(lhs - rhs), Xi, int(keep.sum()), tail_est,
                         q**d * qerr * int(keep.sum()))
