"""Quadruples ``m1^a + m2^a - m3^a - m4^a`` close to zero.

Counts ``(m1, m2, m3, m4)`` in ``[M+1, 2M]^4`` with
``|m1^a + m2^a - m3^a - m4^a| <= delta M^(a-1)``.  The fast path sorts the
``M^2`` ordered pair sums and counts, for every pair, the sums inside a
window by binary search.  Windows are located with slightly widened and
narrowed bounds and the few sums between them are tested with the exact
predicate, so the result agrees bit for bit with direct evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BudgetError, InvalidQueryError
from .stats import growth_exponent

__all__ = ["robert_sargos_count", "robert_sargos_brute", "RSRow", "rs_sweep"]

M_LIMIT = 10**5


def _check(M, delta, alpha):
    if alpha in (0, 1):
        raise InvalidQueryError("alpha must differ from 0 and 1")
    if int(M) != M or M < 2:
        raise InvalidQueryError("M must be an integer >= 2")
    if M > M_LIMIT:
        raise BudgetError(f"M = {M} exceeds the limit {M_LIMIT}")
    if delta < 0:
        raise InvalidQueryError("delta must be nonnegative")


def _pair_sums(M, alpha):
    m = np.arange(M + 1, 2 * M + 1, dtype=float)
    p = m**alpha
    return (p[:, None] + p[None, :]).ravel()


def robert_sargos_count(M: int, delta: float, alpha: float, chunk: int = 1 << 18) -> int:
    """Exact count via sorted pair sums; ``O(M^2 log M)`` time."""
    _check(M, delta, alpha)
    T = delta * float(M) ** (alpha - 1)
    s = np.sort(_pair_sums(M, alpha))
    slack = 8 * np.spacing(s[-1]) + 8 * np.spacing(T)
    total = 0
    for start in range(0, len(s), chunk):
        v = s[start:start + chunk]
        lo_out = np.searchsorted(s, v - T - slack, side="left")
        lo_in = np.searchsorted(s, v - T + slack, side="left")
        hi_in = np.searchsorted(s, v + T - slack, side="right")
        hi_out = np.searchsorted(s, v + T + slack, side="right")
        lo_in = np.minimum(lo_in, hi_in)
        total += int(np.sum(hi_in - lo_in))
        edge = np.flatnonzero((lo_in > lo_out) | (hi_out > hi_in))
        for i in edge:
            for a, b in ((lo_out[i], lo_in[i]), (max(hi_in[i], lo_in[i]), hi_out[i])):
                if b > a:
                    total += int(np.count_nonzero(np.abs(s[a:b] - v[i]) <= T))
    return total


def robert_sargos_brute(M: int, delta: float, alpha: float) -> int:
    """Quartic reference enumeration (``M <= 60``)."""
    _check(M, delta, alpha)
    if M > 60:
        raise BudgetError("brute force is limited to M <= 60")
    T = delta * float(M) ** (alpha - 1)
    s = _pair_sums(M, alpha)
    total = 0
    for v in s:
        total += int(np.count_nonzero(np.abs(s - v) <= T))
    return total


@dataclass(frozen=True)
class RSRow:
    M: int
    delta: float
    alpha: float
    count: int

    @property
    def scaled(self):
        """``count / (delta M^3)``."""
        return self.count / (self.delta * float(self.M) ** 3) if self.delta > 0 else float("nan")


def rs_sweep(Ms, delta, alpha):
    """Counts over ``Ms`` with the growth exponent of ``count`` in ``M``."""
    rows = [RSRow(int(M), float(delta), float(alpha), robert_sargos_count(M, delta, alpha))
            for M in Ms]
    fit = growth_exponent([r.M for r in rows], [r.count for r in rows]) if len(rows) >= 4 else None
    return rows, fit
