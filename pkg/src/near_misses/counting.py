"""Enumeration of rational points ``a/q`` lying close to a Monge chart.

A candidate ``(a, q)`` with ``q <= Q`` and ``a/q`` in the domain is counted
when ``||q f(a/q)|| < delta`` (strict) or ``<= delta`` (nonstrict), where
``||.||`` is the distance to the nearest integer.  Points are counted with
multiplicity unless the query asks for primitive representatives.

Per-denominator subtotals are accumulated with ``math.fsum`` (correctly
rounded), so totals do not depend on the worker count or on the order in
which denominators are processed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import integrate

from ._parallel import parallel_map
from .errors import InvalidQueryError, NearMissesError
from .surfaces import Domain, MongeChart

__all__ = [
    "BumpWeight",
    "PlateauWeight",
    "WeightFunction",
    "partition_weights",
    "CountQuery",
    "CountResult",
    "count_near",
    "count_on",
    "count_coprime",
    "weighted_point_total",
    "main_term",
    "mobius",
]


# ---------------------------------------------------------------------------
# Weights


def _bump_profile(s):
    """exp(-1/(1-s)) for s in [0, 1), zero elsewhere (s = |x-c|^2 / r^2)."""
    out = np.zeros_like(s, dtype=float)
    m = s < 1.0
    out[m] = np.exp(-1.0 / (1.0 - s[m]))
    return out


@dataclass(frozen=True)
class BumpWeight:
    """Radial C-infinity bump ``exp(-1/(1 - |x-c|^2/r^2))`` supported in a ball."""

    center: tuple
    radius: float
    quad_tol: float = 1e-13

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")

    @property
    def dim(self):
        return len(self.center)

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        s = np.sum((x - np.array(self.center)) ** 2, axis=1) / self.radius**2
        return _bump_profile(s)

    def support_box(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def support_inside(self, domain: Domain) -> bool:
        lo, hi = self.support_box()
        if not (np.all(lo > domain.lo_f) and np.all(hi < domain.hi_f)):
            return False
        if domain.ball_radius is not None:
            gap = float(domain.ball_radius) - np.linalg.norm(np.array(self.center) - domain._ball_c())
            return gap > self.radius
        return True

    @property
    def w_hat_zero(self) -> float:
        """Integral of the weight, by radial quadrature."""
        return _bump_integral(self.dim, self.radius, self.quad_tol)


def _bump_integral(d, r, tol=1e-13):
    val, _ = integrate.quad(
        lambda t: math.exp(-1.0 / (1.0 - t * t)) * t ** (d - 1) if t < 1 else 0.0,
        0.0, 1.0, epsabs=tol * 1e-3, epsrel=tol, limit=200,
    )
    sphere_area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return sphere_area * r**d * val


# the bump is the default weight
WeightFunction = BumpWeight


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    m = (t > 0) & (t < 1)
    tm = t[m]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[m] = a / (a + b)
    return out


@dataclass(frozen=True)
class PlateauWeight:
    """Smooth box plateau: 1 on ``[lo, hi]``, 0 outside ``(lo - eps, hi + eps)``.

    Optional ``split`` factors (axis, cut, side) multiply the plateau by a
    smooth step so that sibling pieces sum back to the plateau.
    """

    lo: tuple
    hi: tuple
    eps: float
    split: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))

    @property
    def dim(self):
        return len(self.lo)

    def __call__(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        out = np.ones(len(x))
        e = self.eps
        for i in range(self.dim):
            out *= _smooth_step((x[:, i] - (self.lo[i] - e)) / e)
            out *= _smooth_step(((self.hi[i] + e) - x[:, i]) / e)
        for axis, cut, width, side in self.split:
            s = _smooth_step((x[:, axis] - (cut - width / 2)) / width)
            out *= s if side else 1.0 - s
        return out

    def support_box(self):
        return np.array(self.lo) - self.eps, np.array(self.hi) + self.eps

    def support_inside(self, domain: Domain) -> bool:
        lo, hi = self.support_box()
        return bool(np.all(lo > domain.lo_f) and np.all(hi < domain.hi_f))

    @property
    def w_hat_zero(self) -> float:
        """Exact mass: each smooth transition integrates to ``eps / 2``."""
        if self.split:
            raise NotImplementedError("mass of a split piece is not tabulated")
        return float(np.prod([(h - l) + self.eps for l, h in zip(self.lo, self.hi)]))


def partition_weights(lo, hi, eps, width=None):
    """Split a plateau into ``2^d`` smooth pieces that sum to it exactly.

    Each axis is cut at its midpoint by a smooth step of the given width.
    """
    lo = tuple(float(v) for v in lo)
    hi = tuple(float(v) for v in hi)
    d = len(lo)
    if width is None:
        width = 0.25 * min(h - l for l, h in zip(lo, hi))
    pieces = []
    for mask in range(2**d):
        split = tuple(
            (i, 0.5 * (lo[i] + hi[i]), width, bool((mask >> i) & 1)) for i in range(d)
        )
        pieces.append(PlateauWeight(lo, hi, eps, split))
    return pieces


# ---------------------------------------------------------------------------
# Queries and results


MODES = ("weighted", "indicator", "unweighted")


@dataclass(frozen=True)
class CountQuery:
    """A fully specified counting request.

    ``mode`` selects the summand: ``weighted`` sums ``weight(a/q)``,
    ``indicator`` counts ``a/q`` in the convex set ``K``, ``unweighted``
    counts every point of the domain.
    """

    Q: int
    delta: float
    mode: str = "unweighted"
    weight: Optional[object] = None
    K: Optional[Domain] = None
    coprime: bool = False
    strict: bool = True
    tie_epsilon: float = 0.0
    keep_per_q: bool = True

    def validate(self, chart: Optional[MongeChart] = None):
        if int(self.Q) != self.Q or self.Q < 1:
            raise InvalidQueryError(f"Q must be a positive integer, got {self.Q}")
        if not (0 <= self.delta < 0.5):
            raise InvalidQueryError(f"delta must lie in [0, 1/2), got {self.delta}")
        if self.mode not in MODES:
            raise InvalidQueryError(f"unknown mode {self.mode!r}")
        if self.tie_epsilon < 0:
            raise InvalidQueryError("tie_epsilon must be nonnegative")
        if self.mode == "weighted" and self.weight is None:
            raise InvalidQueryError("weighted mode needs a weight function")
        if self.mode == "indicator":
            if self.K is None:
                raise InvalidQueryError("indicator mode needs a convex set K")
            if chart is not None and not _subset(self.K, chart.domain):
                raise InvalidQueryError("K must be contained in the chart domain")
        if self.mode == "weighted" and chart is not None:
            if not self.weight.support_inside(chart.domain):
                raise InvalidQueryError("weight support must lie strictly inside the domain")
        return self


def _subset(K: Domain, D: Domain) -> bool:
    for kl, kh, dl, dh in zip(K.lo, K.hi, D.lo, D.hi):
        if D.closed:
            if kl < dl or kh > dh:
                return False
        elif kl <= dl or kh >= dh:
            return False
    if D.ball_radius is not None:
        corners = np.array(np.meshgrid(*[[float(a), float(b)] for a, b in zip(K.lo, K.hi)])).reshape(K.dim, -1).T
        return bool(np.all(D.contains(corners)))
    return True


@dataclass
class CountResult:
    """Outcome of a count; a commutative monoid under :meth:`merge`.

    ``per_q`` holds ``(q, subtotal, ambiguous)`` rows in ascending ``q``.
    """

    total: float
    per_q: Optional[list] = None
    ambiguous: int = 0
    candidates_scanned: int = 0
    weighted: bool = False
    mobius_total: Optional[float] = None

    def merge(self, other: "CountResult") -> "CountResult":
        if self.per_q is not None and other.per_q is not None:
            rows = sorted(self.per_q + other.per_q, key=lambda r: r[0])
            total = _combine([r[1] for r in rows], self.weighted or other.weighted)
        else:
            rows = None
            total = _combine([self.total, other.total], self.weighted or other.weighted)
        return CountResult(
            total, rows, self.ambiguous + other.ambiguous,
            self.candidates_scanned + other.candidates_scanned,
            self.weighted or other.weighted,
        )

    def to_csv_rows(self):
        return [(q, s, a) for q, s, a in (self.per_q or [])]


def _combine(values, weighted):
    if weighted:
        return math.fsum(values)
    return int(sum(int(v) for v in values))


# ---------------------------------------------------------------------------
# Enumeration


def _candidates(chart, query, q):
    if query.mode == "weighted":
        return chart.domain.lattice_slice(q, within=query.weight.support_box())
    if query.mode == "indicator":
        return query.K.lattice_slice(q)
    return chart.domain.lattice_slice(q)


def _tie_mask(y, dist, delta, tie_epsilon):
    est = 4.0 * np.spacing(np.abs(y))
    return np.abs(dist - delta) <= np.maximum(tie_epsilon, est)


def _count_one_q(chart, query, q, delta=None):
    delta = query.delta if delta is None else delta
    A = _candidates(chart, query, q)
    scanned = len(A)
    if scanned == 0:
        return (q, 0.0 if query.mode == "weighted" else 0, 0, 0)
    x = A / float(q)
    with np.errstate(invalid="ignore"):
        y = q * chart.f(x)
    finite = np.isfinite(y)
    b = np.rint(np.where(finite, y, 0.0))
    dist = np.abs(y - b)
    inside = (dist < delta) if query.strict else (dist <= delta)
    amb = _tie_mask(y, dist, delta, query.tie_epsilon)
    take = (inside | amb) & finite
    if query.coprime:
        cols = [A[:, i] for i in range(A.shape[1])] + [b.astype(np.int64), np.full(len(A), q)]
        g = np.gcd.reduce(np.column_stack(cols), axis=1)
        take &= g == 1
    n_amb = int(np.count_nonzero(amb & take))
    if query.mode == "weighted":
        sub = math.fsum(query.weight(x[take]).tolist())
    else:
        sub = int(np.count_nonzero(take))
    return (q, sub, n_amb, scanned)


def _run(chart, query, threads, delta=None, Q=None):
    Q = query.Q if Q is None else Q
    # largest denominators carry the most work: schedule them first
    qs = list(range(Q, 0, -1))
    rows = parallel_map(lambda q: _count_one_q(chart, query, q, delta), qs, threads)
    rows.sort(key=lambda r: r[0])
    weighted = query.mode == "weighted"
    total = _combine([r[1] for r in rows], weighted)
    return CountResult(
        total,
        [(r[0], r[1], r[2]) for r in rows] if query.keep_per_q else None,
        sum(r[2] for r in rows),
        sum(r[3] for r in rows),
        weighted,
    )


def _warn_curvature(chart):
    cw = getattr(chart, "curvature_window", None)
    if cw is None or not cw[0] > 0:
        warnings.warn(f"curvature window of {chart.name} is not verified positive", stacklevel=3)


def count_near(chart: MongeChart, query: CountQuery, threads: int = 1) -> CountResult:
    """Count (or weight) lattice points ``a/q`` within ``delta/q`` of the chart.

    Candidates whose distance to the threshold is within
    ``max(tie_epsilon, 4 ulp(q |f|))`` are tallied in ``ambiguous`` and
    included.
    """
    query.validate(chart)
    _warn_curvature(chart)
    return _run(chart, query, threads)


def count_on(chart: MongeChart, Q: int, coprime: bool = False, threads: int = 1) -> CountResult:
    """Exact count of ``(a, q)``, ``q <= Q``, with ``q f(a/q)`` an integer.

    Integer arithmetic only; needs a chart with an exact lift (rational
    polynomials and the catalog's radical charts).
    """
    if int(Q) != Q or Q < 1:
        raise InvalidQueryError("Q must be a positive integer")
    # raises UnsupportedExactModeError up front for charts without a lift
    chart.lift(np.zeros((0, chart.dim), dtype=np.int64), 1)

    def one(q):
        A = chart.domain.lattice_slice(q)
        if len(A) == 0:
            return (q, 0, len(A))
        ok, b = chart.lift(A, q)
        if coprime:
            g = np.array(
                [math.gcd(*(int(v) for v in row), int(bb), q) for row, bb in zip(A[ok], np.asarray(b)[ok])],
                dtype=np.int64,
            )
            return (q, int(np.count_nonzero(g == 1)), len(A))
        return (q, int(np.count_nonzero(ok)), len(A))

    rows = parallel_map(one, list(range(int(Q), 0, -1)), threads)
    rows.sort(key=lambda r: r[0])
    return CountResult(
        sum(r[1] for r in rows), [(r[0], r[1], 0) for r in rows], 0, sum(r[2] for r in rows)
    )


def mobius(n: int) -> list:
    """Table of the Moebius function ``mu(0..n)`` (``mu(0)`` unused)."""
    mu = [1] * (n + 1)
    mu[0] = 0
    is_comp = [False] * (n + 1)
    primes = []
    for i in range(2, n + 1):
        if not is_comp[i]:
            primes.append(i)
            mu[i] = -1
        for p in primes:
            if i * p > n:
                break
            is_comp[i * p] = True
            if i % p == 0:
                mu[i * p] = 0
                break
            mu[i * p] = -mu[i]
    return mu


class MobiusMismatch(NearMissesError):
    """Direct primitive count disagrees with the Moebius-inverted count."""


def count_coprime(chart: MongeChart, query: CountQuery, threads: int = 1,
                  check: Optional[bool] = None) -> CountResult:
    """Count primitive representatives ``gcd(a, b, q) = 1``.

    ``b`` is the integer nearest ``q f(a/q)``.  The same number follows from
    the multiplicity counts by Moebius inversion over the common scale
    ``g``: ``P(Q, delta) = sum_g mu(g) N(Q // g, delta / g)``.  Both are
    computed; for ``Q <= 100`` (or ``check=True``) disagreement raises.
    """
    query.validate(chart)
    _warn_curvature(chart)
    direct = _run(chart, replace(query, coprime=True), threads)
    if check is None:
        check = query.Q <= 100
    if not check:
        return direct
    base = replace(query, coprime=False, keep_per_q=False)
    mu = mobius(query.Q)
    parts = []
    for g in range(1, query.Q + 1):
        if mu[g] == 0:
            continue
        r = _run(chart, base, threads, delta=query.delta / g, Q=query.Q // g)
        parts.append(mu[g] * r.total)
    inv = math.fsum(parts) if query.mode == "weighted" else int(sum(parts))
    direct.mobius_total = inv
    if query.mode == "weighted":
        agree = abs(inv - direct.total) <= 1e-10 * max(1.0, abs(direct.total))
    else:
        agree = inv == direct.total
    if not agree:
        raise MobiusMismatch(f"direct primitive count {direct.total} != Moebius-inverted {inv}")
    return direct


def weighted_point_total(chart: MongeChart, w, Q: int, threads: int = 1) -> float:
    """``N0 = sum_{q <= Q} sum_a w(a/q)`` over all lattice points (no proximity test)."""

    def one(q):
        A = chart.domain.lattice_slice(q, within=w.support_box())
        return math.fsum(w(A / float(q)).tolist()) if len(A) else 0.0

    vals = parallel_map(one, list(range(int(Q), 0, -1)), threads)
    return math.fsum(vals)


def main_term(query: CountQuery, chart: MongeChart) -> float:
    """Heuristic count ``(2 M / n) delta Q^n`` with mass ``M = w_hat(0)`` or ``|K|``."""
    n = chart.ambient_dim
    if query.mode == "weighted":
        mass = query.weight.w_hat_zero
    elif query.mode == "indicator":
        mass = query.K.volume
    else:
        raise InvalidQueryError("no normalised main term for unweighted counts")
    return 2.0 * mass / n * query.delta * float(query.Q) ** n
