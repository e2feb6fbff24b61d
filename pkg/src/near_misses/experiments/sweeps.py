"""Desk-scale sweeps of counts against their predicted main terms and bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..bootstrap import ErrorTermModel, fit_error_model
from ..counting import (
    BumpWeight,
    CountQuery,
    PlateauWeight,
    count_near,
    count_on,
    main_term,
    partition_weights,
)
from ..errors import InvalidQueryError
from ..surfaces import Domain, fermat_curve, parabola
from .stats import growth_exponent

__all__ = [
    "DeltaRule",
    "SweepSpec",
    "SweepRow",
    "SweepTable",
    "asymptotic_sweep",
    "BoundShapeReport",
    "bound_shape_check",
    "SandwichReport",
    "indicator_sandwich_check",
    "example2_lower_bound",
    "FermatExcessReport",
    "fermat_excess_sweep",
]


@dataclass(frozen=True)
class DeltaRule:
    """``fixed`` (``delta = value``), ``power`` (``Q^-value``) or ``floor`` (``Q^(-1+value)``)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("fixed", "power", "floor"):
            raise InvalidQueryError(f"unknown delta rule {self.kind!r}")
        if self.kind == "power" and not 0 < self.value < 1:
            raise InvalidQueryError("power rule needs an exponent in (0, 1)")
        if self.kind == "floor" and not 0 < self.value < 1:
            raise InvalidQueryError("floor rule needs epsilon in (0, 1)")

    def __call__(self, Q) -> float:
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "power":
            return float(Q) ** (-self.value)
        return float(Q) ** (-1.0 + self.value)

    @classmethod
    def parse(cls, text: str) -> "DeltaRule":
        """``"fixed:0.1"``, ``"power:0.5"`` or ``"floor:0.2"``."""
        kind, _, val = text.partition(":")
        try:
            return cls(kind.strip(), float(val))
        except ValueError:
            raise InvalidQueryError(f"cannot parse delta rule {text!r}") from None


@dataclass
class SweepSpec:
    chart: object
    mode: str
    Q_list: Sequence[int]
    delta_rule: DeltaRule
    weight: Optional[object] = None
    K: Optional[Domain] = None
    repetitions: int = 1
    seed: int = 0
    require_large_delta: bool = False
    strict: bool = True

    def validate(self):
        Qs = list(self.Q_list)
        if not Qs or any(b <= a for a, b in zip(Qs, Qs[1:])):
            raise InvalidQueryError("Q_list must be strictly increasing")
        for Q in Qs:
            d = self.delta_rule(Q)
            if not 0 <= d < 0.5:
                raise InvalidQueryError(f"delta = {d} at Q = {Q} is outside [0, 1/2)")
            if self.require_large_delta and d > 0 and not d > float(Q) ** (-1.0 + 1e-9):
                raise InvalidQueryError("this sweep needs delta > Q^(-1+eps)")
        if self.repetitions < 1:
            raise InvalidQueryError("repetitions must be positive")
        return self


@dataclass(frozen=True)
class SweepRow:
    Q: int
    delta: float
    count: float
    main_term: float
    ratio: float
    residual: float


@dataclass
class SweepTable:
    rows: list
    residual_exponent: Optional[float] = None

    def ratios(self):
        return [r.ratio for r in self.rows]

    def ratio_monotone(self) -> bool:
        """``|ratio - 1|`` non-increasing along the sweep."""
        dev = [abs(r - 1) for r in self.ratios()]
        return all(b <= a for a, b in zip(dev, dev[1:]))


def _weights_for(spec: SweepSpec):
    """Weight per repetition; later repetitions shift the bump centre at random."""
    if spec.mode != "weighted":
        return [None]
    w = spec.weight
    if w is None:
        from ..oscillatory import default_weight

        w = default_weight(spec.chart)
    out = [w]
    rng = np.random.default_rng(spec.seed)
    for _ in range(spec.repetitions - 1):
        if not isinstance(w, BumpWeight):
            out.append(w)
            continue
        lo = spec.chart.domain.lo_f + w.radius
        hi = spec.chart.domain.hi_f - w.radius
        c = w.center + rng.uniform(-1, 1, len(lo)) * 0.25 * (hi - lo) / 2
        c = np.clip(c, lo + 1e-9, hi - 1e-9)
        out.append(BumpWeight(tuple(c), w.radius))
    return out


def asymptotic_sweep(spec: SweepSpec, threads: int = 1) -> SweepTable:
    """Counts, main terms, ratios and residuals over the sweep."""
    spec.validate()
    rows = []
    for Q in spec.Q_list:
        delta = spec.delta_rule(Q)
        counts, mains = [], []
        for w in _weights_for(spec):
            q = CountQuery(int(Q), delta, mode=spec.mode, weight=w, K=spec.K,
                           strict=spec.strict, keep_per_q=False)
            res = count_near(spec.chart, q, threads)
            counts.append(float(res.total))
            if spec.mode == "unweighted" or delta == 0:
                mains.append(math.nan)
            else:
                mains.append(main_term(q, spec.chart))
        count = math.fsum(counts) / len(counts)
        main = math.fsum(mains) / len(mains) if not any(math.isnan(m) for m in mains) else math.nan
        ratio = count / main if main and not math.isnan(main) else math.nan
        resid = count - main if not math.isnan(main) else math.nan
        rows.append(SweepRow(int(Q), delta, count, main, ratio, resid))
    table = SweepTable(rows)
    res = [(r.Q, abs(r.residual)) for r in rows if not math.isnan(r.residual) and r.residual != 0]
    if len(res) >= 4:
        table.residual_exponent = growth_exponent(*zip(*res)).slope
    return table


@dataclass
class BoundShapeReport:
    model: ErrorTermModel
    C: float
    worst_slack: float  # min over held-out rows of C * envelope / count
    holds: bool
    envelopes: list


def bound_shape_check(rows: Sequence[SweepRow], n: int, model: Optional[ErrorTermModel] = None,
                      safety: float = 2.0) -> BoundShapeReport:
    """Held-out test of ``count <= C (delta Q^n + E_n(Q))``.

    The shape parameter of ``E_n`` is fitted on all rows (least squares on
    the log of ``count - delta Q^n`` where positive, else the defaults are
    kept).  ``C`` is ``safety`` times the largest ratio ``count / envelope``
    over the first half of the rows; the bound must then hold on the
    second half without refitting.  A nonpositive fitted shape parameter
    falls back to the default model.
    """
    rows = list(rows)
    if len(rows) < 4:
        raise InvalidQueryError("need at least four sweep rows")
    if model is None:
        pts = [(r.Q, r.count - r.delta * r.Q**n) for r in rows]
        pts = [(Q, v) for Q, v in pts if v > 0]
        model = fit_error_model(n, *zip(*pts)) if len(pts) >= 2 else ErrorTermModel(n)
        # the shape parameter must be positive; a nonpositive fit means the
        # residuals carry no log growth and the default shape is used
        if (model.c if n == 3 else model.kappa) <= 0:
            model = ErrorTermModel(n)
        model.amplitude = 1.0
    env = [r.delta * float(r.Q) ** n + float(model(r.Q)) for r in rows]
    half = len(rows) // 2
    C = safety * max(r.count / e for r, e in zip(rows[:half], env[:half]))
    slack = [C * e / r.count if r.count > 0 else math.inf for r, e in zip(rows[half:], env[half:])]
    worst = min(slack)
    return BoundShapeReport(model, C, worst, worst >= 1.0, env)


# ---------------------------------------------------------------------------
# Indicator counts between smooth weights


@dataclass
class SandwichReport:
    Q: int
    delta: float
    inner: float
    indicator: int
    outer: float

    @property
    def holds(self):
        tol = 1e-9 * max(1.0, self.outer)
        return self.inner <= self.indicator + tol and self.indicator <= self.outer + tol


def indicator_sandwich_check(chart, K: Domain, Q: int, delta: float, eps: float = 0.02,
                             threads: int = 1) -> SandwichReport:
    """Indicator count of ``K`` between partitions of unity inside and around ``K``.

    The inner plateau is 1 on ``K`` shrunk by ``eps`` and vanishes outside
    ``K``; the outer one is 1 on ``K``.  Each is split into ``2^d`` smooth
    pieces whose weighted counts are summed.
    """
    lo, hi = K.lo_f, K.hi_f
    inner = partition_weights(lo + eps, hi - eps, eps)
    outer = partition_weights(lo, hi, eps)

    def total(pieces):
        vals = []
        for w in pieces:
            q = CountQuery(Q, delta, mode="weighted", weight=w, keep_per_q=False)
            vals.append(count_near(chart, q, threads).total)
        return math.fsum(vals)

    ind = count_near(chart, CountQuery(Q, delta, mode="indicator", K=K, keep_per_q=False),
                     threads).total
    return SandwichReport(Q, delta, total(inner), int(ind), total(outer))


# ---------------------------------------------------------------------------
# Example growth laws


def example2_lower_bound(Q_max: int, threads: int = 1):
    """Per-``Q`` check of ``count_on(parabola, Q) >= sum_{q <= sqrt Q} q``.

    Returns ``(all_hold, first_failure_Q or None, counts)`` where ``counts``
    are the cumulative exact counts for ``Q = 1..Q_max``.
    """
    res = count_on(parabola(), int(Q_max), threads=threads)
    cum = np.cumsum([r[1] for r in res.per_q])
    for Q in range(1, int(Q_max) + 1):
        r = math.isqrt(Q)
        if cum[Q - 1] < r * (r + 1) // 2:
            return False, Q, cum
    return True, None, cum


@dataclass
class FermatExcessReport:
    Q_list: list
    deltas: list
    counts: list
    slope: float
    stderr: float
    conjecture_slope: float  # exponent of delta Q^2
    lower_bound_slope: float  # exponent of delta^(1/m) Q^(2 - 1/m)

    @property
    def excess(self):
        """Measured slope strictly above the heuristic ``delta Q^2`` shape."""
        return self.slope > self.conjecture_slope


def fermat_excess_sweep(Q_list, m: int = 4, gamma: float = 0.5, margin: float = 0.001,
                        threads: int = 1) -> FermatExcessReport:
    """Near-point counts on ``x^m + y^m = 1`` including its flat end.

    With ``delta = Q^-gamma`` the heuristic ``delta Q^2`` grows like
    ``Q^(2-gamma)`` while the flat end alone contributes
    ``delta^(1/m) Q^(2-1/m)``, i.e. ``Q^(2 - (1+gamma)/m)``.
    """
    chart = fermat_curve(m, margin=margin)
    deltas, counts = [], []
    for Q in Q_list:
        d = float(Q) ** (-gamma)
        deltas.append(d)
        counts.append(count_near(chart, CountQuery(int(Q), d, keep_per_q=False), threads).total)
    fit = growth_exponent(Q_list, counts)
    return FermatExcessReport(list(Q_list), deltas, counts, fit.slope, fit.stderr,
                              2 - gamma, 2 - (1 + gamma) / m)
