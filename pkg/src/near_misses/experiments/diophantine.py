"""Convergence sums and dyadic counts for simultaneous approximation.

The series ``sum_q (psi(q)/q)^(s+1) q^n`` decides whether almost every point
of an ``s``-dimensional manifold in ``R^n`` is ``psi``-approximable only
finitely often.  For the catalog families the verdict follows from exponent
comparison; partial sums and an integral tail are reported alongside.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..counting import CountQuery, _count_one_q
from ..errors import BudgetError, InvalidQueryError
from .._parallel import parallel_map
from .stats import growth_exponent

__all__ = [
    "ApproxFunction",
    "power_psi",
    "log_psi",
    "DAConvergence",
    "da_convergence_check",
    "DyadicRow",
    "DyadicReport",
    "da_dyadic_count_check",
]


@dataclass(frozen=True)
class ApproxFunction:
    """Decreasing approximation function.

    ``family`` is ``"power"`` (``q^-nu``), ``"log"`` (``q^-1 (log q)^-lam``,
    defined from ``q = 2``), ``"constant"`` or ``"custom"`` (``func``).
    ``clamp_eta`` replaces ``psi`` by ``max(psi, q^(-1+eta))``; ``cap``
    bounds it from above.
    """

    family: str
    nu: float = 1.0
    lam: float = 0.0
    value: float = 0.0
    func: Optional[Callable] = None
    clamp_eta: Optional[float] = None
    cap: Optional[float] = None

    def __post_init__(self):
        if self.family not in ("power", "log", "constant", "custom"):
            raise InvalidQueryError(f"unknown family {self.family!r}")
        if self.family == "custom" and self.func is None:
            raise InvalidQueryError("custom family needs func")

    @property
    def start(self) -> int:
        return 2 if self.family == "log" else 1

    def raw(self, q):
        q = np.asarray(q, dtype=float)
        if self.family == "power":
            return q ** (-self.nu)
        if self.family == "log":
            return 1.0 / (q * np.log(q) ** self.lam)
        if self.family == "constant":
            return np.full_like(q, self.value)
        return np.asarray(self.func(q), dtype=float)

    def __call__(self, q):
        v = self.raw(q)
        q = np.asarray(q, dtype=float)
        if self.clamp_eta is not None:
            v = np.maximum(v, q ** (-1.0 + self.clamp_eta))
        if self.cap is not None:
            v = np.minimum(v, self.cap)
        return v

    def is_decreasing(self, q_max=10**4) -> bool:
        q = np.arange(self.start, q_max + 1)
        return bool(np.all(np.diff(self(q)) <= 0))


def power_psi(nu, **kw):
    return ApproxFunction("power", nu=nu, **kw)


def log_psi(lam, **kw):
    return ApproxFunction("log", lam=lam, **kw)


@dataclass
class DAConvergence:
    verdict: str  # "converges", "diverges" or "inconclusive"
    symbolic: bool
    exponent: Optional[float]  # power of q in the summand
    log_exponent: Optional[float]  # power of log q in the summand
    checkpoints: list  # (q_max, partial sum)
    tail: float

    @property
    def converges(self):
        return self.verdict == "converges"


def _exponents(psi: ApproxFunction, s, n):
    """Summand ``q^e (log q)^-mu`` for catalog families; ``None`` otherwise."""
    if psi.clamp_eta is not None or psi.cap is not None:
        return None
    if psi.family == "power":
        return -psi.nu * (s + 1) + n - s - 1, 0.0
    if psi.family == "log":
        return float(n - 2 * s - 2), psi.lam * (s + 1)
    if psi.family == "constant" and psi.value > 0:
        return float(n - s - 1), 0.0
    return None


def _tail(e, mu, N):
    """Integral of ``t^e (log t)^-mu`` over ``[N, inf)`` (an upper bound for ``mu >= 0``)."""
    L = math.log(N)
    if e < -1:
        return N ** (e + 1) / (-e - 1) * L ** (-mu)
    if e == -1 and mu > 1:
        return L ** (1 - mu) / (mu - 1)
    return math.inf


def da_convergence_check(psi: ApproxFunction, s: float, n: int, q_max: int = 10**6,
                         chunk: int = 1 << 18) -> DAConvergence:
    """Verdict on ``sum_q psi(q)^(s+1) q^(n-s-1)`` plus partial sums to ``q_max``."""
    if not s > (n - 1) / 2:
        warnings.warn("s <= (n-1)/2: outside the range where the count bound applies",
                      stacklevel=2)
    ex = _exponents(psi, s, n)
    checkpoints = []
    marks = sorted({10**k for k in range(1, int(math.log10(q_max)) + 1)} | {q_max})
    acc = []
    total_parts = []
    q0 = psi.start
    mi = 0
    for start in range(q0, q_max + 1, chunk):
        q = np.arange(start, min(start + chunk, q_max + 1), dtype=float)
        terms = psi(q) ** (s + 1) * q ** (n - s - 1)
        csum = np.cumsum(terms)
        base = math.fsum(total_parts)
        while mi < len(marks) and marks[mi] <= q[-1]:
            k = int(marks[mi] - start)
            if k >= 0:
                checkpoints.append((int(marks[mi]), base + math.fsum(terms[:k + 1])))
            mi += 1
        total_parts.append(math.fsum(terms))
    if ex is None:
        return DAConvergence("inconclusive", False, None, None, checkpoints, math.nan)
    e, mu = ex
    if e < -1 or (e == -1 and mu > 1):
        verdict = "converges"
    else:
        verdict = "diverges"
    return DAConvergence(verdict, True, e, -mu, checkpoints, _tail(e, mu, q_max))


# ---------------------------------------------------------------------------
# Dyadic counts


@dataclass(frozen=True)
class DyadicRow:
    i: int
    count: int
    psi: float
    threshold: float
    ratio: float  # count / (psi(2^i) 2^(n i))


@dataclass
class DyadicReport:
    c4: float
    rows: list
    slope: float  # growth of log2(ratio) per dyadic step over the upper half
    bounded: bool


def _lipschitz(chart, n_per_axis=201):
    pts = chart.sample_grid(n_per_axis) if chart.dim == 1 else chart.sample_grid(41)
    g = np.asarray(chart.grad(pts)).reshape(len(pts), -1)
    return float(np.max(np.linalg.norm(g, axis=1)))


def da_dyadic_count_check(chart, psi: ApproxFunction, i_range: Sequence[int], threads: int = 1,
                          budget: float = 5e8, slope_tol: float = 0.25) -> DyadicReport:
    """Count ``a/q`` with ``2^i <= q < 2^(i+1)`` and ``||q f(a/q)|| <= c4 psi(2^i)``.

    ``c4 = 1 + c3 sqrt(n-1)`` with ``c3`` the measured maximum of ``|grad f|``.
    The threshold is capped just below ``1/2``.  The ratio to
    ``psi(2^i) 2^(n i)`` is reported; it is declared bounded when a line
    fitted to ``log2(ratio)`` over the upper half of the range has slope at
    most ``slope_tol``.
    """
    n = chart.ambient_dim
    if n not in (2, 3):
        raise InvalidQueryError("dyadic counts are implemented for n = 2, 3")
    i_range = list(i_range)
    vol = chart.domain.volume
    est = sum(vol * (2 ** (i + 1)) ** n for i in i_range)
    if est > budget:
        raise BudgetError(f"about {est:.3g} candidates exceed the budget {budget:.3g}")
    c4 = 1.0 + _lipschitz(chart) * math.sqrt(n - 1)
    rows = []
    for i in i_range:
        p = float(psi(np.array([2.0**i]))[0])
        thr = min(c4 * p, 0.5 - 1e-12)
        query = CountQuery(2 ** (i + 1), thr, strict=False, keep_per_q=False)
        qs = list(range(2 ** (i + 1) - 1, 2**i - 1, -1))
        parts = parallel_map(lambda q: _count_one_q(chart, query, q)[1], qs, threads)
        count = int(sum(parts))
        rows.append(DyadicRow(i, count, p, thr, count / (p * 2.0 ** (n * i))))
    upper = rows[len(rows) // 2:]
    if len(upper) >= 2:
        x = np.array([r.i for r in upper], dtype=float)
        y = np.log2(np.array([max(r.ratio, 1e-300) for r in upper]))
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = 0.0
    return DyadicReport(c4, rows, slope, slope <= slope_tol)
