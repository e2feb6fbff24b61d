"""Legendre dual charts and the dual-side geometry ``(U, V, R, rho)``.

For a chart whose gradient is a diffeomorphism ``D -> R = grad f(D)`` the
dual is ``f*(y) = y . x - f(x)`` with ``x = (grad f)^(-1)(y)``.  Then
``grad f* = (grad f)^(-1)`` and ``hess f*(y) = hess f(x)^(-1)``, and the dual
of the dual is ``f`` again.  ``R`` is never stored in closed form: a point
belongs to it when Newton inversion of the gradient converges inside ``D``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CurvatureError, DegenerateGeometryError, OutsideDualDomain
from .surfaces import Domain, _as_points, check_gradient_diffeo, curvature_window

__all__ = [
    "grad_inverse",
    "grad_inverse_many",
    "DualChart",
    "legendre_dual",
    "DualGeometry",
    "dual_geometry",
    "dual_residuals",
]

MAX_ITER = 100
MAX_HALVINGS = 30


def grad_inverse_many(chart, ys, tol=1e-12, x0=None, max_iter=MAX_ITER):
    """Solve ``grad f(x) = y`` for a batch of targets by damped Newton.

    Returns ``(xs, converged)``.  Each step uses the Hessian as Jacobian and
    is halved (up to 30 times) until the residual decreases and the iterate
    stays in the domain.  ``x0`` defaults to the domain centre.
    """
    d = chart.dim
    ys, _ = _as_points(ys, d)
    n = len(ys)
    if x0 is None:
        x = np.tile(_center(chart), (n, 1))
    else:
        x = np.array(np.broadcast_to(np.asarray(x0, dtype=float).reshape(-1, d), (n, d)))
    res = chart.grad(x) - ys
    nrm = np.linalg.norm(res, axis=1)
    active = nrm > tol
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        H = chart.hess(x[idx])
        try:
            step = np.linalg.solve(H, res[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.stack([np.linalg.lstsq(h, r, rcond=None)[0] for h, r in zip(H, res[idx])])
        t = np.ones(len(idx))
        done = np.zeros(len(idx), dtype=bool)
        for _h in range(MAX_HALVINGS + 1):
            todo = np.flatnonzero(~done)
            if len(todo) == 0:
                break
            cand = x[idx[todo]] - t[todo, None] * step[todo]
            inside = chart.contains(cand)
            new_res = np.full((len(todo), d), np.inf)
            if inside.any():
                new_res[inside] = chart.grad(cand[inside]) - ys[idx[todo][inside]]
            new_nrm = np.linalg.norm(new_res, axis=1)
            better = inside & (new_nrm < nrm[idx[todo]])
            acc = todo[better]
            x[idx[acc]] = cand[better]
            res[idx[acc]] = new_res[better]
            nrm[idx[acc]] = new_nrm[better]
            done[acc] = True
            t[todo[~better]] *= 0.5
        # no acceptable step after all halvings: stalled
        stalled = idx[~done]
        active[stalled] = False
        active &= nrm > tol
    converged = nrm <= tol
    return x, converged


def _center(chart):
    if hasattr(chart, "center_point"):
        return chart.center_point()
    return chart.domain.center


def grad_inverse(chart, y, tol=1e-12, x0=None):
    """Single-target inverse gradient; raises :class:`OutsideDualDomain` on failure."""
    xs, ok = grad_inverse_many(chart, np.atleast_1d(np.asarray(y, dtype=float)).reshape(1, -1),
                               tol=tol, x0=x0)
    if not ok[0]:
        raise OutsideDualDomain(f"Newton did not converge for y={np.asarray(y).tolist()}")
    return xs[0]


class DualChart:
    """Legendre dual of a chart, evaluated through Newton inversion.

    Exposes the same field interface as :class:`~near_misses.surfaces.MongeChart`
    (``f``, ``grad``, ``hess``, ``contains``) so it can be dualised again.
    """

    def __init__(self, base, tol=1e-12):
        self.base = base
        self.tol = tol
        self.ambient_dim = base.ambient_dim
        self.name = f"{base.name}*"
        # interior grid plus the boundary: |grad f| can grow fast near the edge
        pts = np.vstack([base.sample_grid(25), base.domain.boundary_samples()])
        img = base.grad(pts)
        pad = 0.05 * (img.max(axis=0) - img.min(axis=0) + 1e-12)
        lo, hi = img.min(axis=0) - pad, img.max(axis=0) + pad
        # enclosing box of R; membership proper is operational (Newton)
        self.domain = Domain.box([float(v) for v in lo], [float(v) for v in hi])
        cw = curvature_window(base, 10)
        self.curvature_window = (1.0 / cw.c2, 1.0 / cw.c1)

    @property
    def dim(self):
        return self.ambient_dim - 1

    def center_point(self):
        return self.base.grad(_center(self.base).reshape(1, -1))[0]

    def preimage(self, y, strict=True):
        ys, single = _as_points(y, self.dim)
        xs, ok = grad_inverse_many(self.base, ys, tol=self.tol)
        if strict and not ok.all():
            bad = ys[~ok][0]
            raise OutsideDualDomain(f"{bad.tolist()} is outside grad f(D)")
        if not strict:
            xs[~ok] = np.nan
        return xs, single

    def f(self, y):
        ys, _ = _as_points(y, self.dim)
        xs, single = self.preimage(ys)
        v = np.sum(ys * xs, axis=1) - self.base.f(xs)
        return v[0] if single else v

    def grad(self, y):
        xs, single = self.preimage(y)
        return xs[0] if single else xs

    def hess(self, y):
        xs, single = self.preimage(y)
        H = np.linalg.inv(self.base.hess(xs))
        return H[0] if single else H

    def contains(self, y):
        ys, _ = _as_points(y, self.dim)
        ok = self.domain.contains(ys)
        if ok.any():
            _, conv = grad_inverse_many(self.base, ys[ok], tol=self.tol)
            ok[np.flatnonzero(ok)] = conv
        return ok

    def sample_grid(self, n_per_axis=10):
        return self.base.grad(self.base.sample_grid(n_per_axis))


def legendre_dual(chart, n_per_axis=10) -> DualChart:
    """Construct the dual chart after checking curvature and injectivity."""
    cw = curvature_window(chart, n_per_axis)
    if cw.violation:
        raise CurvatureError(f"{chart.name}: curvature window not positive (c1={cw.c1})")
    rep = check_gradient_diffeo(chart, n_per_axis)
    if not rep.injective:
        raise CurvatureError(f"{chart.name}: gradient is not injective on the grid")
    return DualChart(chart)


@dataclass
class DualResiduals:
    involution: float
    round_trip: float
    legendre_identity: float
    hessian_reciprocity: float
    signature_constant: bool
    n_points: int


def _signature(H):
    ev = np.linalg.eigvalsh(H)
    return np.sum(ev > 0, axis=-1) - np.sum(ev < 0, axis=-1)


def dual_residuals(chart, n_per_axis=10, min_points=100) -> DualResiduals:
    """Residuals of the duality identities on a grid of the base domain.

    The grid is refined until it holds at least ``min_points`` points.

    ``involution`` is ``max |f**(x) - f(x)|`` where the double dual is
    obtained by Newton-inverting the dual gradient (not by reusing
    ``grad f``).
    """
    dual = legendre_dual(chart, n_per_axis)
    pts = chart.sample_grid(n_per_axis)
    while len(pts) < min_points:
        n_per_axis += 1
        pts = chart.sample_grid(n_per_axis)
    ys = chart.grad(pts)
    # Legendre identity f*(grad f(x)) = x . grad f(x) - f(x)
    fstar = dual.f(ys)
    leg = np.max(np.abs(fstar - (np.sum(pts * ys, axis=1) - chart.f(pts))))
    back = dual.grad(ys)
    rt = np.max(np.linalg.norm(back - pts, axis=1))
    # double dual: solve grad f*(y) = x for y, then f**(x) = x . y - f*(y)
    y2, ok = grad_inverse_many(dual, pts, tol=1e-12)
    if not ok.all():
        raise OutsideDualDomain("double-dual inversion failed")
    fss = np.sum(pts * y2, axis=1) - dual.f(y2)
    inv = np.max(np.abs(fss - chart.f(pts)))
    Hs = dual.hess(ys)
    H = chart.hess(pts)
    recip = np.max(np.abs(np.linalg.det(Hs) * np.linalg.det(H) - 1.0))
    sig = _signature(Hs)
    return DualResiduals(float(inv), float(rt), float(leg), float(recip),
                         bool(np.all(sig == sig[0])), len(pts))


# ---------------------------------------------------------------------------
# Geometry of the frequency partition


def _dist_to_polyline(points, poly, closed):
    """Distance from each point to a polyline (2-D) given by its vertices."""
    a = poly
    b = np.roll(poly, -1, axis=0) if closed else poly[1:]
    if not closed:
        a = poly[:-1]
    ab = b - a
    L2 = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    out = np.full(len(points), np.inf)
    for start in range(0, len(points), 512):
        p = points[start:start + 512]
        ap = p[:, None, :] - a[None]
        t = np.clip(np.sum(ap * ab[None], axis=2) / L2[None], 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        dd = np.linalg.norm(p[:, None, :] - proj, axis=2)
        out[start:start + 512] = dd.min(axis=1)
    return out


@dataclass
class DualGeometry:
    """Support ``U`` of the weight, its gradient image ``V``, ``R`` and ``rho``.

    ``V_boundary``/``R_boundary`` are the gradient images of the sampled
    boundaries (two points in 1-D, closed polylines in 2-D).
    """

    chart: object
    weight: object
    U_center: np.ndarray
    U_radius: float
    V_boundary: np.ndarray
    R_boundary: np.ndarray
    rho: float

    @property
    def dim(self):
        return len(self.U_center)

    def in_V(self, ys):
        ys, _ = _as_points(ys, self.dim)
        xs, ok = grad_inverse_many(self.chart, ys, tol=1e-12)
        inside = np.zeros(len(ys), dtype=bool)
        if ok.any():
            inside[ok] = np.linalg.norm(xs[ok] - self.U_center, axis=1) < self.U_radius
        return inside

    def dist_to_V(self, ys):
        """Euclidean distance to ``V`` (zero inside)."""
        ys, _ = _as_points(ys, self.dim)
        if self.dim == 1:
            lo, hi = np.sort(self.V_boundary[:, 0])
            y = ys[:, 0]
            d = np.maximum(lo - y, y - hi)
            return np.maximum(d, 0.0)
        d = _dist_to_polyline(ys, self.V_boundary, closed=True)
        d[self.in_V(ys)] = 0.0
        return d

    @property
    def V_box(self):
        return self.V_boundary.min(axis=0), self.V_boundary.max(axis=0)


def dual_geometry(chart, w, n_boundary=2000) -> DualGeometry:
    """Sample ``V = grad f(U)``, ``R = grad f(D)`` and ``rho = dist(dR, dV) / 2``."""
    if not w.support_inside(chart.domain):
        raise DegenerateGeometryError("weight support is not strictly inside the domain")
    c = np.array(w.center, dtype=float)
    r = float(w.radius)
    d = chart.dim
    if d == 1:
        ub = np.array([[c[0] - r], [c[0] + r]])
        rb = chart.domain.boundary_samples()
        # boundary points of a closed domain are still limits of the open interior
        Vb = chart.grad(ub)
        Rb = chart.grad(rb)
        rho = 0.5 * float(np.min(np.abs(Rb[:, None, 0] - Vb[None, :, 0])))
        res = 0.0
    elif d == 2:
        th = 2 * np.pi * np.arange(n_boundary) / n_boundary
        ub = c + r * np.column_stack([np.cos(th), np.sin(th)])
        Vb = chart.grad(ub)
        rb = chart.domain.boundary_samples(n_boundary)
        Rb = chart.grad(rb)
        rho = 0.5 * float(np.min(_dist_to_polyline(Vb, Rb, closed=True)))
        res = float(np.max(np.linalg.norm(np.diff(Rb, axis=0), axis=1)))
    else:
        raise NotImplementedError("dual geometry is implemented for n <= 3")
    if not rho > res:
        raise DegenerateGeometryError(f"rho={rho} is below the sampling resolution {res}")
    return DualGeometry(chart, w, c, r, Vb, Rb, rho)
