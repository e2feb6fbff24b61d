"""Log-log regression used by every growth-rate experiment."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import InvalidQueryError

__all__ = ["GrowthFit", "growth_exponent"]


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int

    def within(self, target, tol):
        return abs(self.slope - target) <= tol


def growth_exponent(x, y, min_points: int = 4) -> GrowthFit:
    """Least-squares slope of ``log y`` against ``log x`` with its standard error.

    Pairs with ``y <= 0`` are dropped with a warning.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise InvalidQueryError("x and y must have equal length")
    if np.any(x <= 0) or np.any(np.diff(x) <= 0):
        raise InvalidQueryError("x must be positive and strictly increasing")
    keep = y > 0
    if not keep.all():
        warnings.warn(f"dropping {int((~keep).sum())} nonpositive values", stacklevel=2)
        x, y = x[keep], y[keep]
    if len(x) < min_points:
        raise InvalidQueryError(f"need at least {min_points} points, have {len(x)}")
    fit = stats.linregress(np.log(x), np.log(y))
    return GrowthFit(float(fit.slope), float(fit.stderr), float(fit.intercept), len(x))
