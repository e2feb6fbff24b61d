"""Hypersurface patches in Monge form and the built-in surface catalog.

A patch is the graph ``(x, f(x))`` of a scalar function over a bounded
domain ``D`` in ``R^(n-1)``.  All field evaluations are vectorised: points are
passed as arrays of shape ``(N, d)`` (or a single point of shape ``(d,)``)
with ``d = n - 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import CurvatureError, DomainError, UnsupportedExactModeError

__all__ = [
    "Domain",
    "MongeChart",
    "CurvatureWindow",
    "DiffeoReport",
    "SurfaceCatalogEntry",
    "fd_step",
    "fd_gradient",
    "fd_hessian",
    "curvature_window",
    "check_gradient_diffeo",
    "paraboloid",
    "parabola",
    "sphere_patch",
    "fermat_curve",
    "robert_sargos_surface",
    "polynomial_chart",
    "catalog",
    "get_surface",
    "load_surface",
    "surface_from_dict",
]


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (list, tuple)):
        return Fraction(int(v[0]), int(v[1]))
    if isinstance(v, float):
        # decimal literal, not the binary expansion of the double
        return Fraction(repr(v))
    return Fraction(v)


def _as_points(x, d):
    """Return (points of shape (N, d), single) for a point or a batch."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1:
        if d == 1 and arr.shape[0] != 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != d:
            raise ValueError(f"expected a point of dimension {d}, got shape {arr.shape}")
        return arr.reshape(1, d), True
    if arr.shape[-1] != d:
        raise ValueError(f"expected points of dimension {d}, got shape {arr.shape}")
    return arr.reshape(-1, d), False


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box, optionally intersected with a Euclidean ball.

    Bounds are exact rationals so lattice slices ``qD ∩ Z^d`` are computed
    without rounding.  ``closed`` selects whether boundary points belong to
    the domain (the default open box realises a bounded open set).
    """

    lo: tuple
    hi: tuple
    closed: bool = False
    ball_center: Optional[tuple] = None
    ball_radius: Optional[Fraction] = None

    def __post_init__(self):
        lo = tuple(_frac(v) for v in self.lo)
        hi = tuple(_frac(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("domain bounds must be nonempty and of equal length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("domain must be nonempty: need lo < hi on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if self.ball_radius is not None:
            c = self.ball_center if self.ball_center is not None else (0,) * len(lo)
            object.__setattr__(self, "ball_center", tuple(_frac(v) for v in c))
            object.__setattr__(self, "ball_radius", _frac(self.ball_radius))
            if self.ball_radius <= 0:
                raise ValueError("ball radius must be positive")

    @classmethod
    def box(cls, lo, hi, closed=False):
        return cls(tuple(lo), tuple(hi), closed)

    @classmethod
    def ball(cls, center, radius, closed=False):
        center = tuple(_frac(c) for c in center)
        radius = _frac(radius)
        return cls(
            tuple(c - radius for c in center),
            tuple(c + radius for c in center),
            closed,
            center,
            radius,
        )

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_f(self) -> np.ndarray:
        return np.array([float(v) for v in self.lo])

    @property
    def hi_f(self) -> np.ndarray:
        return np.array([float(v) for v in self.hi])

    @property
    def center(self) -> np.ndarray:
        if self.ball_center is not None:
            return np.array([float(v) for v in self.ball_center])
        return 0.5 * (self.lo_f + self.hi_f)

    @property
    def diam(self) -> float:
        return float(np.linalg.norm(self.hi_f - self.lo_f))

    @property
    def inradius(self) -> float:
        """Radius of the largest ball around ``center`` inside the domain."""
        c = self.center
        r = float(np.min(np.minimum(c - self.lo_f, self.hi_f - c)))
        if self.ball_radius is not None:
            r = min(r, float(self.ball_radius) - float(np.linalg.norm(c - self._ball_c())))
        return r

    @property
    def volume(self) -> float:
        box = float(np.prod(self.hi_f - self.lo_f))
        if self.ball_radius is None:
            return box
        r = float(self.ball_radius)
        c = self._ball_c()
        if np.all(c - r >= self.lo_f) and np.all(c + r <= self.hi_f):
            d = self.dim
            return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d
        raise NotImplementedError("volume of a clipped ball is not supported")

    def _ball_c(self):
        return np.array([float(v) for v in self.ball_center])

    def contains(self, x) -> np.ndarray:
        pts, _ = _as_points(x, self.dim)
        lo, hi = self.lo_f, self.hi_f
        if self.closed:
            ok = np.all((pts >= lo) & (pts <= hi), axis=1)
        else:
            ok = np.all((pts > lo) & (pts < hi), axis=1)
        if self.ball_radius is not None:
            r2 = np.sum((pts - self._ball_c()) ** 2, axis=1)
            R2 = float(self.ball_radius) ** 2
            ok &= (r2 <= R2) if self.closed else (r2 < R2)
        return ok

    def axis_ranges(self, q: int):
        """Inclusive integer ranges of ``a_i`` with ``a_i / q`` inside the box."""
        out = []
        for lo, hi in zip(self.lo, self.hi):
            ql, qh = q * lo, q * hi
            if self.closed:
                amin, amax = math.ceil(ql), math.floor(qh)
            else:
                amin, amax = math.floor(ql) + 1, math.ceil(qh) - 1
            out.append((amin, amax))
        return out

    def lattice_slice(self, q: int, within=None) -> np.ndarray:
        """All ``a`` in ``Z^d`` with ``a/q`` in the domain, lexicographic order.

        ``within`` optionally restricts to a further (float) box
        ``(lo, hi)`` given as arrays; used to skip the zero set of a weight.
        """
        ranges = self.axis_ranges(q)
        if within is not None:
            wlo, whi = within
            ranges = [
                (max(a, math.floor(q * l)), min(b, math.ceil(q * h)))
                for (a, b), l, h in zip(ranges, wlo, whi)
            ]
        if any(a > b for a, b in ranges):
            return np.empty((0, self.dim), dtype=np.int64)
        axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in ranges]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        if self.ball_radius is not None:
            grid = grid[self._in_ball_exact(grid, q)]
        return grid

    def _in_ball_exact(self, a, q):
        dens = [c.denominator for c in self.ball_center] + [self.ball_radius.denominator]
        L = reduce(lambda x, y: x * y // math.gcd(x, y), dens, 1)
        cn = [int(c * L) for c in self.ball_center]
        rn = int(self.ball_radius * L)
        big = (L * (q + 1) * (max(abs(float(v)) for v in self.lo + self.hi) + 1)) ** 2 * self.dim
        dtype = np.int64 if big < 2**62 else object
        A = a.astype(dtype) * L
        s = sum((A[:, i] - q * cn[i]) ** 2 for i in range(self.dim))
        R2 = (q * rn) ** 2
        return np.asarray(s <= R2 if self.closed else s < R2, dtype=bool)

    def sample_grid(self, n_per_axis: int = 10) -> np.ndarray:
        """Cell-centred tensor grid restricted to the domain."""
        lo, hi = self.lo_f, self.hi_f
        t = (np.arange(n_per_axis) + 0.5) / n_per_axis
        axes = [lo[i] + t * (hi[i] - lo[i]) for i in range(self.dim)]
        g = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return g[self.contains(g)]

    def boundary_samples(self, n: int = 400) -> np.ndarray:
        """Points on the boundary (endpoints in 1-D, a closed polyline in 2-D)."""
        if self.dim == 1:
            return np.array([[self.lo_f[0]], [self.hi_f[0]]])
        if self.dim != 2:
            raise NotImplementedError("boundary sampling implemented for d <= 2")
        if self.ball_radius is not None and self._ball_inside_box():
            th = 2 * np.pi * np.arange(n) / n
            r = float(self.ball_radius)
            return self._ball_c() + r * np.column_stack([np.cos(th), np.sin(th)])
        if self.ball_radius is not None:
            raise NotImplementedError("boundary of a clipped ball is not supported")
        (x0, y0), (x1, y1) = self.lo_f, self.hi_f
        m = max(n // 4, 2)
        t = np.arange(m) / m
        edges = [
            np.column_stack([x0 + t * (x1 - x0), np.full(m, y0)]),
            np.column_stack([np.full(m, x1), y0 + t * (y1 - y0)]),
            np.column_stack([x1 - t * (x1 - x0), np.full(m, y1)]),
            np.column_stack([np.full(m, x0), y1 - t * (y1 - y0)]),
        ]
        return np.vstack(edges)

    def _ball_inside_box(self):
        r = float(self.ball_radius)
        c = self._ball_c()
        return bool(np.all(c - r >= self.lo_f - 1e-15) and np.all(c + r <= self.hi_f + 1e-15))

    def to_dict(self) -> dict:
        out = {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}
        if self.closed:
            out["closed"] = True
        if self.ball_radius is not None:
            out["ball"] = {
                "center": [float(v) for v in self.ball_center],
                "radius": float(self.ball_radius),
            }
        return out


# ---------------------------------------------------------------------------
# Finite differences


def fd_step(domain: Domain) -> float:
    """Step for the fourth-order stencils, ``1e-4`` of the domain diameter."""
    return 1e-4 * domain.diam


# weights of the five-point first-derivative stencil at offsets -2h..2h
_STENCIL = ((-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0))


def _diff(func, pts, i, h):
    """Fourth-order central difference of ``func`` along axis ``i``."""
    e = np.zeros(pts.shape[1])
    e[i] = h
    acc = 0.0
    for k, c in _STENCIL:
        acc = acc + c * np.asarray(func(pts + k * e))
    return acc / (12 * h)


def fd_gradient(func, pts, h):
    """Central-difference gradient of a vectorised scalar field (error ``O(h^4)``)."""
    pts = np.asarray(pts, dtype=float)
    g = np.empty_like(pts)
    for i in range(pts.shape[1]):
        g[:, i] = _diff(func, pts, i, h)
    return g


def fd_hessian(func, pts, h, grad=None):
    """Central-difference Hessian.

    Differences the gradient when one is supplied, otherwise applies the
    stencil twice to ``func``.  The result is symmetrised.
    """
    pts = np.asarray(pts, dtype=float)
    d = pts.shape[1]
    H = np.empty((pts.shape[0], d, d))
    if grad is not None:
        for i in range(d):
            H[:, :, i] = _diff(grad, pts, i, h)
    else:
        for i in range(d):
            for j in range(i, d):
                v = _diff(lambda p: _diff(func, p, j, h), pts, i, h)
                H[:, i, j] = v
                H[:, j, i] = v
    return 0.5 * (H + np.swapaxes(H, 1, 2))


# ---------------------------------------------------------------------------
# Charts


@dataclass(frozen=True, eq=False)
class MongeChart:
    """Hypersurface patch ``(x, f(x))`` over ``domain``.

    ``func``/``grad_func``/``hess_func`` are vectorised callables on arrays
    of shape ``(N, d)``; missing derivatives fall back to central differences
    with step ``fd_step(domain)``.  ``exact_lift(a, q)`` returns
    ``(mask, b)`` where ``mask`` marks the lattice points with
    ``q f(a/q) = b`` an exact integer; it is what enables exact (delta = 0)
    counting.
    """

    name: str
    ambient_dim: int
    domain: Domain
    func: Callable
    grad_func: Optional[Callable] = None
    hess_func: Optional[Callable] = None
    smoothness_order: Optional[int] = None
    curvature_window: Optional[tuple] = None
    exact_lift: Optional[Callable] = None
    polynomial: Optional[dict] = None
    provenance: str = ""
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ambient_dim < 2:
            raise ValueError("ambient dimension must be at least 2")
        if self.domain.dim != self.ambient_dim - 1:
            raise ValueError("domain dimension must be ambient_dim - 1")
        if self.smoothness_order is None:
            n = self.ambient_dim
            object.__setattr__(self, "smoothness_order", max((n - 1) // 2 + 5, n + 1))

    @property
    def dim(self) -> int:
        return self.ambient_dim - 1

    @property
    def h(self) -> float:
        return fd_step(self.domain)

    @property
    def has_closed_form(self) -> bool:
        return self.grad_func is not None and self.hess_func is not None

    def f(self, x):
        pts, single = _as_points(x, self.dim)
        v = np.asarray(self.func(pts), dtype=float).reshape(-1)
        return v[0] if single else v

    def grad(self, x):
        pts, single = _as_points(x, self.dim)
        if self.grad_func is not None:
            g = np.asarray(self.grad_func(pts), dtype=float).reshape(-1, self.dim)
        else:
            g = fd_gradient(self.func, pts, self.h)
        return g[0] if single else g

    def hess(self, x):
        pts, single = _as_points(x, self.dim)
        if self.hess_func is not None:
            H = np.asarray(self.hess_func(pts), dtype=float).reshape(-1, self.dim, self.dim)
        else:
            H = fd_hessian(self.func, pts, self.h, self.grad_func)
        return H[0] if single else H

    def contains(self, x):
        return self.domain.contains(x)

    def eval(self, x):
        """Value, gradient and Hessian at a single point of the domain."""
        pts, _ = _as_points(x, self.dim)
        if pts.shape[0] != 1:
            raise ValueError("eval takes a single point")
        if not self.domain.contains(pts)[0]:
            raise DomainError(f"point {pts[0].tolist()} is outside the domain of {self.name}")
        return self.f(pts)[0], self.grad(pts)[0], self.hess(pts)[0]

    def sample_grid(self, n_per_axis: int = 10) -> np.ndarray:
        return self.domain.sample_grid(n_per_axis)

    def lift(self, a, q):
        """Exact integer lift ``q f(a/q)`` where defined; see class docstring."""
        if self.exact_lift is None:
            raise UnsupportedExactModeError(
                f"chart {self.name!r} has no exact rational form; delta = 0 counting is unsupported"
            )
        return self.exact_lift(np.asarray(a), int(q))

    def with_domain(self, domain: Domain, name=None) -> "MongeChart":
        cw = _grid_window(self, domain)
        spec = dict(self.spec)
        spec["domain"] = domain.to_dict()
        return MongeChart(
            name or self.name,
            self.ambient_dim,
            domain,
            self.func,
            self.grad_func,
            self.hess_func,
            self.smoothness_order,
            cw,
            self.exact_lift,
            self.polynomial,
            self.provenance,
            spec,
        )


@dataclass(frozen=True)
class SurfaceCatalogEntry:
    name: str
    chart: MongeChart
    provenance: str


# ---------------------------------------------------------------------------
# Curvature and diffeomorphism checks


@dataclass(frozen=True)
class CurvatureWindow:
    c1: float
    c2: float
    argmin: np.ndarray
    argmax: np.ndarray
    n_points: int
    violation: bool


def _grid_for(chart, n_per_axis):
    sampler = chart.sample_grid if hasattr(chart, "sample_grid") else chart.domain.sample_grid
    need = 10 ** (chart.ambient_dim - 1)
    pts = sampler(n_per_axis)
    # ball domains lose corner cells; densify until the minimum is met
    while len(pts) < need and n_per_axis < 4 * need:
        n_per_axis += 1
        pts = sampler(n_per_axis)
    return pts


def curvature_window(chart, n_per_axis: int = 10) -> CurvatureWindow:
    """Min/max of ``|det hess f|`` over a tensor grid, with witness points.

    ``violation`` is set when the minimum is not strictly positive.
    """
    pts = _grid_for(chart, n_per_axis)
    if len(pts) < 10 ** (chart.ambient_dim - 1):
        raise ValueError(f"grid resolves to {len(pts)} points; need >= 10^(n-1)")
    dets = np.abs(np.linalg.det(chart.hess(pts)))
    i, k = int(np.argmin(dets)), int(np.argmax(dets))
    c1 = float(dets[i])
    return CurvatureWindow(c1, float(dets[k]), pts[i], pts[k], len(pts), not c1 > 0)


def _grid_window(chart, domain, n_per_axis=41):
    pts = domain.sample_grid(n_per_axis)
    dets = np.abs(np.linalg.det(chart.hess(pts)))
    return (float(dets.min()), float(dets.max()))


@dataclass(frozen=True)
class DiffeoReport:
    injective: bool
    min_ratio: float
    worst_pair: tuple
    n_pairs: int


def check_gradient_diffeo(chart, n_per_axis: int = 10) -> DiffeoReport:
    """Pairwise evidence that ``grad f`` is injective on a grid.

    Reports ``min |grad f(x) - grad f(x')| / |x - x'|`` over all grid pairs;
    a collision is a pair whose gradient images coincide.
    """
    cw = curvature_window(chart, n_per_axis)
    if cw.violation:
        raise CurvatureError(f"curvature window of {chart.name} is not positive (c1={cw.c1})")
    pts = _grid_for(chart, n_per_axis)
    g = chart.grad(pts)
    i, j = np.triu_indices(len(pts), k=1)
    dx = np.linalg.norm(pts[i] - pts[j], axis=1)
    dg = np.linalg.norm(g[i] - g[j], axis=1)
    ratio = dg / dx
    k = int(np.argmin(ratio))
    scale = max(1.0, float(np.max(np.abs(g))))
    collide = bool(np.any(dg <= 1e-12 * scale))
    return DiffeoReport(not collide, float(ratio[k]), (pts[i[k]], pts[j[k]]), len(ratio))


# ---------------------------------------------------------------------------
# Exact lifts


def _int_dtype(bound):
    return np.int64 if bound < 2**62 else object


def _isqrt_array(v):
    """Exact integer square roots of a nonnegative integer array."""
    if v.dtype == object:
        return np.array([math.isqrt(int(t)) for t in v], dtype=object)
    r = np.floor(np.sqrt(v.astype(float))).astype(np.int64)
    r -= (r * r > v).astype(np.int64)
    r += ((r + 1) * (r + 1) <= v).astype(np.int64)
    return r


def _iroot_array(v, m):
    """Exact floor m-th roots of a nonnegative integer array."""
    if m == 2:
        return _isqrt_array(v)
    out = []
    for t in v.tolist():
        t = int(t)
        r = int(round(t ** (1.0 / m))) if t < 2**1000 else int(t ** (1.0 / m))
        while r**m > t:
            r -= 1
        while (r + 1) ** m <= t:
            r += 1
        out.append(r)
    return np.array(out, dtype=object)


def _sphere_lift(a, q):
    a = np.asarray(a)
    bound = (q + 1) ** 2 * (a.shape[1] + 1)
    dt = _int_dtype(bound)
    A = a.astype(dt)
    s = q * q - np.sum(A * A, axis=1)
    ok = s >= 0
    s = np.where(ok, s, 0)
    r = _isqrt_array(s)
    ok &= r * r == s
    return np.asarray(ok, dtype=bool), r


def _fermat_lift(m):
    def lift(a, q):
        a = np.asarray(a)[:, 0]
        bound = float(q + 1) ** m
        dt = _int_dtype(bound)
        A = a.astype(dt)
        s = (dt(q) if dt is np.int64 else q) ** m - A**m
        ok = s >= 0
        s = np.where(ok, s, 0)
        r = _iroot_array(s, m)
        ok &= np.asarray(r**m == s, dtype=bool)
        return np.asarray(ok, dtype=bool), r

    return lift


def _poly_lift(coeffs):
    dens = [c.denominator for c in coeffs.values()]
    D = reduce(lambda x, y: x * y // math.gcd(x, y), dens, 1)
    deg = max(sum(e) for e in coeffs)
    terms = [(tuple(e), int(c * D)) for e, c in coeffs.items()]

    def lift(a, q):
        a = np.asarray(a)
        amax = int(np.max(np.abs(a))) if a.size else 0
        base = max(amax, q, 1)
        bound = sum(abs(c) for _, c in terms) * base**deg * q
        dt = _int_dtype(bound * 4)
        A = a.astype(dt)
        qq = q if dt is object else np.int64(q)
        N = np.zeros(len(a), dtype=dt)
        for e, c in terms:
            t = np.full(len(a), c, dtype=dt)
            for i, p in enumerate(e):
                if p:
                    t = t * A[:, i] ** p
            t = t * qq ** (deg - sum(e))
            N = N + t
        # q P(a/q) = N q / (D q^deg)
        num = N * qq
        den = D * q**deg
        ok = np.asarray(num % den == 0, dtype=bool)
        return ok, num // den

    return lift


# ---------------------------------------------------------------------------
# Catalog


def _finish(chart: MongeChart) -> MongeChart:
    cw = _grid_window(chart, chart.domain)
    return MongeChart(
        chart.name,
        chart.ambient_dim,
        chart.domain,
        chart.func,
        chart.grad_func,
        chart.hess_func,
        chart.smoothness_order,
        cw,
        chart.exact_lift,
        chart.polynomial,
        chart.provenance,
        chart.spec,
    )


def polynomial_chart(name, coefficients, domain: Domain, provenance="custom polynomial"):
    """Chart of a polynomial with exact rational coefficients.

    ``coefficients`` maps exponent tuples to rationals (``Fraction``, int or an
    ``(p, q)`` integer pair).
    """
    coeffs = {tuple(int(p) for p in e): _frac(c) for e, c in coefficients.items()}
    coeffs = {e: c for e, c in coeffs.items() if c != 0}
    d = domain.dim
    if not coeffs:
        coeffs = {(0,) * d: Fraction(0)}
    if any(len(e) != d for e in coeffs):
        raise ValueError("exponent tuples must match the domain dimension")
    items = [(np.array(e), float(c)) for e, c in coeffs.items()]

    def func(x):
        out = np.zeros(len(x))
        for e, c in items:
            out += c * np.prod(x**e, axis=1)
        return out

    def _mono(x, e):
        # x**e with zero exponents giving 1 and negative exponents giving 0
        res = np.ones(len(x))
        for i, p in enumerate(e):
            if p < 0:
                return np.zeros(len(x))
            if p:
                res = res * x[:, i] ** p
        return res

    def grad(x):
        g = np.zeros((len(x), d))
        for e, c in items:
            for i in range(d):
                if e[i]:
                    ee = e.copy()
                    ee[i] -= 1
                    g[:, i] += c * e[i] * _mono(x, ee)
        return g

    def hess(x):
        H = np.zeros((len(x), d, d))
        for e, c in items:
            for i in range(d):
                for j in range(d):
                    ee = e.copy()
                    k = ee[i]
                    ee[i] -= 1
                    k2 = ee[j]
                    ee[j] -= 1
                    if k and k2:
                        H[:, i, j] += c * k * k2 * _mono(x, ee)
        return H

    spec = {
        "name": name,
        "ambient_dim": d + 1,
        "kind": "polynomial",
        "coefficients": [
            {"powers": list(e), "value": [c.numerator, c.denominator]} for e, c in coeffs.items()
        ],
        "domain": domain.to_dict(),
    }
    return _finish(
        MongeChart(
            name, d + 1, domain, func, grad, hess,
            exact_lift=_poly_lift(coeffs), polynomial=coeffs, provenance=provenance, spec=spec,
        )
    )


def paraboloid(n=3, lo=0.1, hi=0.9, closed=False, domain=None):
    """``f(x) = |x|^2 / 2`` on ``(lo, hi)^(n-1)``."""
    d = n - 1
    dom = domain or Domain.box([lo] * d, [hi] * d, closed)
    coeffs = {tuple(2 if k == i else 0 for k in range(d)): Fraction(1, 2) for i in range(d)}
    ch = polynomial_chart(f"paraboloid{n}", coeffs, dom, "quadratic model surface")
    spec = {"name": f"paraboloid{n}", "kind": "builtin", "ambient_dim": n, "domain": dom.to_dict()}
    return _replace(ch, func=lambda x: 0.5 * np.sum(x * x, axis=1),
                    grad_func=lambda x: np.array(x, dtype=float),
                    hess_func=lambda x: np.broadcast_to(np.eye(d), (len(x), d, d)).copy(),
                    spec=spec)


def parabola(lo=0, hi=1, closed=True, domain=None):
    """``f(x) = x^2`` on ``[0, 1]`` (Example 2 of the counting literature)."""
    dom = domain or Domain.box([lo], [hi], closed)
    ch = polynomial_chart("parabola", {(2,): 1}, dom, "parabola y = x^2")
    spec = {"name": "parabola", "kind": "builtin", "ambient_dim": 2, "domain": dom.to_dict()}
    return _replace(ch, func=lambda x: x[:, 0] ** 2,
                    grad_func=lambda x: 2.0 * x,
                    hess_func=lambda x: np.full((len(x), 1, 1), 2.0),
                    spec=spec)


def _replace(chart, **kw):
    fields = dict(
        name=chart.name, ambient_dim=chart.ambient_dim, domain=chart.domain, func=chart.func,
        grad_func=chart.grad_func, hess_func=chart.hess_func,
        smoothness_order=chart.smoothness_order, curvature_window=chart.curvature_window,
        exact_lift=chart.exact_lift, polynomial=chart.polynomial,
        provenance=chart.provenance, spec=chart.spec,
    )
    fields.update(kw)
    return MongeChart(**fields)


def sphere_patch(n=3, margin=0.05, domain=None):
    """Upper hemisphere ``f(x) = sqrt(1 - |x|^2)`` on the ball ``|x| < 1 - margin``."""
    d = n - 1
    dom = domain or Domain.ball([0] * d, 1 - _frac(margin))

    def func(x):
        return np.sqrt(1.0 - np.sum(x * x, axis=1))

    def grad(x):
        return -x / func(x)[:, None]

    def hess(x):
        f = func(x)
        eye = np.eye(d)[None]
        return -eye / f[:, None, None] - np.einsum("ni,nj->nij", x, x) / (f**3)[:, None, None]

    spec = {"name": f"sphere{n}", "kind": "builtin", "ambient_dim": n,
            "margin": float(margin), "domain": dom.to_dict()}
    return _finish(MongeChart(f"sphere{n}", n, dom, func, grad, hess,
                              exact_lift=_sphere_lift, provenance="unit hypersphere",
                              spec=spec))


def fermat_curve(m=4, margin=0.05, domain=None):
    """``f(x) = (1 - x^m)^(1/m)`` on ``(margin, 1 - margin)``.

    The curvature vanishes at ``x = 0`` for ``m >= 3``; a small margin keeps
    the flat end inside the domain.
    """
    dom = domain or Domain.box([_frac(margin)], [1 - _frac(margin)])
    m_f = float(m)

    def func(x):
        return (1.0 - x[:, 0] ** m_f) ** (1.0 / m_f)

    def grad(x):
        t = x[:, 0]
        return (-(t ** (m_f - 1)) * (1.0 - t**m_f) ** (1.0 / m_f - 1.0))[:, None]

    def hess(x):
        t = x[:, 0]
        v = -(m_f - 1) * t ** (m_f - 2) * (1.0 - t**m_f) ** (1.0 / m_f - 2.0)
        return v[:, None, None]

    lift = _fermat_lift(int(m)) if float(m).is_integer() else None
    spec = {"name": f"fermat{m}", "kind": "builtin", "ambient_dim": 2,
            "margin": float(margin), "params": {"m": m}, "domain": dom.to_dict()}
    return _finish(MongeChart(f"fermat{m}", 2, dom, func, grad, hess, exact_lift=lift,
                              provenance="Fermat curve x^m + y^m = 1", spec=spec))


def robert_sargos_surface(alpha=1.5, lo=1.1, hi=1.9, domain=None):
    """``f(x1, x2) = (x1^a + x2^a - 1)^(1/a)`` on a sub-box of ``[1, 2]^2``."""
    dom = domain or Domain.box([lo, lo], [hi, hi])
    a = float(alpha)

    def S(x):
        return x[:, 0] ** a + x[:, 1] ** a - 1.0

    def func(x):
        return S(x) ** (1.0 / a)

    def grad(x):
        s = S(x) ** (1.0 / a - 1.0)
        return s[:, None] * x ** (a - 1.0)

    def hess(x):
        s = S(x)
        p = x ** (a - 1.0)
        H = (1.0 - a) * (s ** (1.0 / a - 2.0))[:, None, None] * np.einsum("ni,nj->nij", p, p)
        diag = (a - 1.0) * (s ** (1.0 / a - 1.0))[:, None] * x ** (a - 2.0)
        H[:, 0, 0] += diag[:, 0]
        H[:, 1, 1] += diag[:, 1]
        return H

    spec = {"name": "rs", "kind": "builtin", "ambient_dim": 3,
            "params": {"alpha": a}, "domain": dom.to_dict()}
    return _finish(MongeChart("rs", 3, dom, func, grad, hess,
                              provenance="surface x1^a + x2^a - 1 = y^a", spec=spec))


_BUILDERS = {
    "paraboloid2": lambda **kw: paraboloid(2, **kw),
    "paraboloid3": lambda **kw: paraboloid(3, **kw),
    "parabola": parabola,
    "sphere2": lambda **kw: sphere_patch(2, **kw),
    "sphere3": lambda **kw: sphere_patch(3, **kw),
    "fermat4": lambda **kw: fermat_curve(4, **kw),
    "rs": robert_sargos_surface,
}

_PROVENANCE = {
    "paraboloid2": "quadratic model curve |x|^2/2",
    "paraboloid3": "quadratic model surface |x|^2/2",
    "parabola": "parabola of the rational-points-on-curve example",
    "sphere2": "unit circle, hypersphere example with n = 2",
    "sphere3": "unit sphere patch, hypersphere example with n = 3",
    "fermat4": "Fermat quartic, the vanishing-curvature counterexample",
    "rs": "diophantine-inequality surface with alpha = 3/2",
}


def catalog() -> dict:
    """All built-in surfaces with their default parameters."""
    return {
        name: SurfaceCatalogEntry(name, build(), _PROVENANCE[name])
        for name, build in _BUILDERS.items()
    }


def get_surface(name: str, **overrides) -> MongeChart:
    """Build a catalog surface; keyword overrides go to its builder."""
    try:
        build = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown surface {name!r}; known: {sorted(_BUILDERS)}") from None
    return build(**overrides)


def _domain_from_dict(doc, d):
    if doc is None:
        return None
    if "ball" in doc:
        b = doc["ball"]
        dom = Domain.ball(b["center"], _frac(b["radius"]), bool(doc.get("closed", False)))
        return dom
    lo, hi = doc["lo"], doc["hi"]
    if len(lo) != d:
        raise ValueError(f"domain must have {d} coordinates")
    return Domain.box([_frac(v) for v in lo], [_frac(v) for v in hi], bool(doc.get("closed", False)))


def surface_from_dict(doc: dict) -> MongeChart:
    """Build a chart from the JSON surface document schema.

    ``{name, ambient_dim, kind: builtin|polynomial, coefficients,
    domain: {lo[], hi[]}, margin}``; polynomial coefficients are
    ``[{"powers": [...], "value": [p, q]}, ...]``.
    """
    kind = doc.get("kind", "builtin")
    n = int(doc["ambient_dim"])
    dom = _domain_from_dict(doc.get("domain"), n - 1)
    if kind == "polynomial":
        coeffs = {tuple(c["powers"]): _frac(c["value"]) for c in doc["coefficients"]}
        if dom is None:
            raise ValueError("polynomial surfaces require a domain")
        return polynomial_chart(doc.get("name", "polynomial"), coeffs, dom)
    if kind != "builtin":
        raise ValueError(f"unknown surface kind {kind!r}")
    name = doc["name"]
    base = name.rstrip("0123456789")
    params = dict(doc.get("params", {}))
    kw = {}
    if dom is not None:
        kw["domain"] = dom
    if base == "sphere":
        return sphere_patch(n, margin=doc.get("margin", 0.05), **kw)
    if base == "paraboloid":
        return paraboloid(n, **kw)
    if base == "parabola":
        return parabola(**kw)
    if base == "fermat":
        m = params.get("m", int(name[len(base):] or 4))
        return fermat_curve(m, margin=doc.get("margin", 0.05), **kw)
    if base == "rs":
        return robert_sargos_surface(params.get("alpha", 1.5), **kw)
    raise ValueError(f"unknown builtin surface {name!r}")


def load_surface(source) -> MongeChart:
    """Catalog name, path to a JSON surface document, or an already-parsed dict."""
    if isinstance(source, MongeChart):
        return source
    if isinstance(source, dict):
        return surface_from_dict(source)
    s = str(source)
    if s in _BUILDERS:
        return get_surface(s)
    p = Path(s)
    if p.suffix == ".json" or p.exists():
        return surface_from_dict(json.loads(p.read_text()))
    raise ValueError(f"unknown surface {s!r}")
