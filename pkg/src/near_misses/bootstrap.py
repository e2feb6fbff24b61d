"""Exact bookkeeping for the bootstrap exponent recursion.

Starting from ``beta_1 = n`` each step transfers a counting bound with
exponent ``beta`` on the dual side to the improved exponent

    beta' = n - (n-1) / (2 beta - n + 1),

equivalently ``beta' - (n-1) = (beta - (n-1)) / (beta - (n-1)/2)``.  All
arithmetic is in :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidQueryError

__all__ = [
    "beta_step",
    "contraction_factor",
    "ExponentSequence",
    "exponent_sequence",
    "iteration_schedule",
    "ErrorTermModel",
    "PredictedBound",
    "predicted_bound",
    "fit_error_model",
]


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def beta_step(n: int, beta_prev) -> Fraction:
    """One step of the recursion; requires ``beta_prev > n - 1``."""
    b = _as_fraction(beta_prev)
    if not b > n - 1:
        raise DomainError(f"beta must exceed n-1 = {n - 1}, got {b}")
    return n - Fraction(n - 1) / (2 * b - n + 1)


def contraction_factor(n: int, beta) -> Fraction:
    """``1 / (beta - (n-1)/2)``, the factor by which ``beta - (n-1)`` shrinks."""
    return 1 / (_as_fraction(beta) - Fraction(n - 1, 2))


class ExponentSequence:
    """Exact exponents ``beta_1 .. beta_imax``.

    Each ``beta_i`` is held as an integer pair ``(num, den)`` with ``den > 0``.
    For ``n >= 4`` the denominators grow geometrically (about 16000 bits at
    ``i = 10^4``), and normalising a :class:`~fractions.Fraction` at every step
    would dominate the run time.  The checks compare pairs by
    cross-multiplication, which is exact whether or not a pair is reduced;
    :class:`Fraction` objects are built on access.
    """

    def __init__(self, n: int, pairs, schedule: Optional[int] = None):
        self.n = n
        self.pairs = list(pairs)
        self.schedule = schedule

    def __getitem__(self, i):
        """``beta_i`` with 1-based ``i``."""
        if i < 1:
            raise IndexError("exponents are indexed from 1")
        return Fraction(*self.pairs[i - 1])

    def __len__(self):
        return len(self.pairs)

    @property
    def betas(self):
        return [Fraction(p, r) for p, r in self.pairs]

    @property
    def i_max(self):
        return len(self.pairs)

    def _gaps(self):
        # beta_i - (n-1) as (numerator, denominator)
        lim = self.n - 1
        return [(p - lim * r, r) for p, r in self.pairs]

    def closed_form_holds(self) -> bool:
        """For ``n = 3``: ``beta_i == 2 + 1/i`` for every stored ``i``."""
        if self.n != 3:
            raise InvalidQueryError("the closed form 2 + 1/i applies to n = 3")
        return all(p * i == (2 * i + 1) * r for i, (p, r) in enumerate(self.pairs, 1))

    def contraction_holds(self) -> bool:
        """``beta_{i+1} - (n-1) <= (2/(n-1)) (beta_i - (n-1))`` for every step (``n >= 4``)."""
        g = self._gaps()
        k = self.n - 1
        return all(k * gb * ra <= 2 * ga * rb for (ga, ra), (gb, rb) in zip(g, g[1:]))

    def transformed_recursion_holds(self) -> bool:
        """``beta_{i+1} - (n-1) == (beta_i - (n-1)) / (beta_i - (n-1)/2)``."""
        k = self.n - 1
        g = self._gaps()
        out = True
        for (pa, ra), (ga, _), (gb, rb) in zip(self.pairs, g, g[1:]):
            # gb/rb == (ga/ra) / ((2 pa - k ra) / (2 ra)) == 2 ga / (2 pa - k ra)
            out &= gb * (2 * pa - k * ra) == 2 * ga * rb
        return out

    def strictly_decreasing(self) -> bool:
        return all(pb * ra < pa * rb for (pa, ra), (pb, rb) in zip(self.pairs, self.pairs[1:]))

    def rows(self, Q=None):
        """``(i, beta_i, float(beta_i), scheduled i(Q))`` for CSV output."""
        sched = iteration_schedule(self.n, Q) if Q is not None else self.schedule
        return [(i, b, float(b), sched) for i, b in enumerate(self.betas, 1)]


def _strip_twos(p, r):
    t = min((p & -p).bit_length(), (r & -r).bit_length()) - 1
    return (p >> t, r >> t) if t > 0 else (p, r)


def exponent_sequence(n: int, i_max: int, verify: bool = True) -> ExponentSequence:
    """``beta_1 .. beta_{i_max}`` exactly; checks the closed form or contraction."""
    if n < 2:
        raise InvalidQueryError("n must be at least 2")
    if i_max < 1:
        raise InvalidQueryError("i_max must be at least 1")
    lim = n - 1
    p, r = n, 1
    pairs = [(p, r)]
    for _ in range(i_max - 1):
        # n - (n-1)/(2p/r - (n-1)) = (n d - (n-1) r) / d with d = 2p - (n-1) r > 0
        d = 2 * p - lim * r
        p, r = _strip_twos(n * d - lim * r, d)
        pairs.append((p, r))
    seq = ExponentSequence(n, pairs)
    if verify:
        if n == 3 and not seq.closed_form_holds():
            raise AssertionError("closed form 2 + 1/i failed")
        if n >= 4 and not seq.contraction_holds():
            raise AssertionError("contraction factor exceeded 2/(n-1)")
    return seq


def iteration_schedule(n: int, Q: float) -> int:
    """Number of bootstrap steps used at height ``Q``.

    ``floor(sqrt(log Q))`` for ``n = 3`` and ``floor(log log Q / log 1.5)``
    otherwise (natural logs).  For ``Q`` below ``e`` the double log is
    negative; the schedule is then clamped at zero.
    """
    if Q < 3:
        raise InvalidQueryError("the schedule is defined for Q >= 3")
    if n == 3:
        # floor(sqrt(floor(x))) == floor(sqrt(x)), and isqrt is exact
        return math.isqrt(math.floor(math.log(Q)))
    return max(0, math.floor(math.log(math.log(Q)) / math.log(1.5)))


@dataclass
class ErrorTermModel:
    """Shape of the error term: ``A Q^2 exp(c sqrt(log Q))`` for ``n = 3``,
    ``A Q^(n-1) (log Q)^kappa`` for ``n >= 4`` and ``A Q^(3/2) (log Q)^kappa``
    for curves."""

    n: int
    c: float = 1.0
    kappa: float = 1.0
    C: float = 2.0
    amplitude: float = 1.0

    def log_value(self, Q):
        L = np.log(np.asarray(Q, dtype=float))
        if self.n == 3:
            shape = self.c * np.sqrt(L)
        else:
            shape = self.kappa * np.log(L)
        return math.log(self.amplitude) + self.base_exponent * L + shape

    def __call__(self, Q):
        return np.exp(self.log_value(Q))

    @property
    def base_exponent(self):
        return 1.5 if self.n == 2 else self.n - 1

    def check_growth(self, Qs=None) -> bool:
        """``E/Q^base`` increasing without bound and ``E/Q^n`` decreasing to 0 on a grid."""
        Qs = np.asarray(Qs if Qs is not None else np.logspace(2, 300, 60))
        logE = self.log_value(Qs)
        lo = logE - self.base_exponent * np.log(Qs)
        hi = logE - self.n * np.log(Qs)
        return bool(np.all(np.diff(lo) > 0) and np.all(np.diff(hi) < 0) and hi[-1] - hi[0] < -math.log(1e6))


@dataclass
class PredictedBound:
    envelope: float
    best_i: int
    per_i: list  # (i, delta Q^n + C^i Q^beta_i log Q)
    terminal: float


def predicted_bound(n: int, Q: float, delta: float, model: Optional[ErrorTermModel] = None,
                    seq: Optional[ExponentSequence] = None) -> PredictedBound:
    """Bootstrap envelope ``min_i (delta Q^n + C^i Q^beta_i log Q)`` and ``E_n(Q)``.

    ``i`` ranges over ``1 .. i(Q)`` (at least one step).
    """
    model = model if model is not None else ErrorTermModel(n)
    imax = max(1, iteration_schedule(n, Q))
    if seq is None or len(seq) < imax:
        seq = exponent_sequence(n, imax, verify=False)
    main = delta * Q**n
    logQ = math.log(Q)
    per = []
    for i in range(1, imax + 1):
        per.append((i, main + model.C**i * Q ** float(seq[i]) * logQ))
    best = min(per, key=lambda t: t[1])
    return PredictedBound(best[1], best[0], per, float(model(Q)))


def fit_error_model(n: int, Qs: Sequence[float], residuals: Sequence[float],
                    C: float = 2.0) -> ErrorTermModel:
    """Least squares on log residuals for the shape parameter and amplitude.

    Fits ``log R - base log Q = p * g(Q) + log A`` with ``g = sqrt(log Q)``
    (``p = c``, ``n = 3``) or ``g = log log Q`` (``p = kappa``).
    """
    Qs = np.asarray(Qs, dtype=float)
    R = np.abs(np.asarray(residuals, dtype=float))
    if len(Qs) < 2 or np.any(R <= 0):
        raise InvalidQueryError("need at least two positive residuals")
    base = 1.5 if n == 2 else n - 1
    y = np.log(R) - base * np.log(Qs)
    g = np.sqrt(np.log(Qs)) if n == 3 else np.log(np.log(Qs))
    A = np.column_stack([g, np.ones_like(g)])
    (p, logA), *_ = np.linalg.lstsq(A, y, rcond=None)
    if n == 3:
        return ErrorTermModel(n, c=float(p), C=C, amplitude=float(np.exp(logA)))
    return ErrorTermModel(n, kappa=float(p), C=C, amplitude=float(np.exp(logA)))
