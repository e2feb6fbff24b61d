"""Fejér kernel and the Selberg majorant/minorant pair for an interval mod 1.

The Selberg pair is built from Vaaler's trigonometric approximation of the
sawtooth ``psi(x) = x - floor(x) - 1/2``::

    V(x) = -sum_{k=1}^{J} g(k/(J+1)) sin(2 pi k x) / (pi k),
    g(u) = pi u (1-u) cot(pi u) + u,

whose error is at most ``Delta_{J+1}(x) / (2J+2)`` with the Fejér sum
``Delta_{J+1}(x) = sum_{|k|<=J} (1 - |k|/(J+1)) e(kx)``.  Writing the
indicator of ``[alpha, beta]`` as ``beta - alpha + psi(alpha-x) + psi(x-beta)``
and adding or subtracting the error envelopes gives ``S+`` and ``S-``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, InvalidQueryError

__all__ = [
    "fejer_coefficients",
    "fejer_eval",
    "fejer_majorization",
    "SelbergPair",
    "selberg_pair",
    "interval_indicator",
    "DecompositionCheck",
    "decomposition_check",
]


def fejer_coefficients(J: int) -> np.ndarray:
    """Coefficients ``(J - |j|)/J^2`` for ``j = -J..J``."""
    if J < 1:
        raise InvalidQueryError("J must be at least 1")
    j = np.arange(-J, J + 1)
    return (J - np.abs(j)) / J**2


def _fejer_sum(J, theta):
    j = np.arange(1, J)
    c = (J - j) / J**2
    return 1.0 / J + 2.0 * np.cos(2 * np.pi * np.outer(theta, j)) @ c


def fejer_eval(J: int, theta):
    """``F_J(theta) = (sin(pi J theta) / (J sin(pi theta)))^2``."""
    if J < 1:
        raise InvalidQueryError("J must be at least 1")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    # F_J has period 1; reducing first (exactly) avoids cancellation in sin near integers
    th = th - np.round(th)
    s = np.sin(np.pi * th)
    out = np.empty_like(th)
    near = np.abs(s) < 1e-8
    ok = ~near
    out[ok] = (np.sin(np.pi * J * th[ok]) / (J * s[ok])) ** 2
    if near.any():
        out[near] = _fejer_sum(J, th[near])
    return out if np.ndim(theta) else float(out[0])


def _circle_norm(theta):
    t = np.asarray(theta, dtype=float)
    return np.abs(t - np.round(t))


def fejer_majorization(J: int, delta: float, theta) -> bool:
    """Check ``(pi^2/4) F_J(theta) >= 1`` at every ``theta`` with ``||theta|| <= delta``."""
    if not 0 < delta < 0.5:
        raise InvalidQueryError("delta must lie in (0, 1/2)")
    if J != math.floor(1 / (2 * delta)):
        raise InvalidQueryError("J must equal floor(1/(2 delta))")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    th = th[_circle_norm(th) <= delta]
    if len(th) == 0:
        return True
    return bool(np.all(np.pi**2 / 4 * fejer_eval(J, th) >= 1.0))


# ---------------------------------------------------------------------------
# Selberg pair


def _vaaler_g(u):
    return np.pi * u * (1 - u) / np.tan(np.pi * u) + u


def interval_indicator(alpha, beta, x, closed=True):
    """Indicator of ``[alpha, beta]`` (or the open interval) on ``R/Z``."""
    t = np.mod(np.asarray(x, dtype=float) - alpha, 1.0)
    L = beta - alpha
    if closed:
        return ((t <= L) | (t >= 1.0)).astype(float)
    return ((t > 0) & (t < L)).astype(float)


@dataclass(frozen=True)
class SelbergPair:
    """Trigonometric polynomials ``S- <= chi_[alpha,beta] <= S+`` of degree ``J``.

    ``coeff_plus[J + m]`` holds the Fourier coefficient at frequency ``m``.
    """

    J: int
    alpha: float
    beta: float
    coeff_plus: np.ndarray
    coeff_minus: np.ndarray

    @property
    def frequencies(self):
        return np.arange(-self.J, self.J + 1)

    def coefficient(self, m, sign=+1):
        c = self.coeff_plus if sign > 0 else self.coeff_minus
        return complex(c[self.J + m])

    def _eval_both(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        m = np.arange(1, self.J + 1)
        ph = np.outer(x, m)
        ph -= np.round(ph)
        E = np.exp(2j * np.pi * ph)
        # real polynomials: c(-m) is the conjugate of c(m)
        J = self.J
        out = []
        for c in (self.coeff_plus, self.coeff_minus):
            out.append(c[J].real + 2.0 * np.real(E @ c[J + 1:]))
        return out

    def plus(self, x):
        return self._eval_both(x)[0]

    def minus(self, x):
        return self._eval_both(x)[1]

    def coefficient_bound(self, m):
        """``1/(J+1) + min(beta - alpha, 1/(pi |m|))``."""
        return 1.0 / (self.J + 1) + min(self.beta - self.alpha, 1.0 / (math.pi * abs(m)))

    def sandwich_violation(self, n_grid=10_000):
        """Largest violation of ``S- <= chi <= S+`` on a uniform grid.

        Endpoints are handled by comparing ``S+`` with the closed indicator
        and ``S-`` with the open one.
        """
        x = np.arange(n_grid) / n_grid
        x = np.concatenate([x, [self.alpha % 1.0, self.beta % 1.0]])
        sp, sm = self._eval_both(x)
        up = interval_indicator(self.alpha, self.beta, x, closed=True) - sp
        lo = sm - interval_indicator(self.alpha, self.beta, x, closed=False)
        i, k = int(np.argmax(up)), int(np.argmax(lo))
        if up[i] >= lo[k]:
            return float(up[i]), float(x[i])
        return float(lo[k]), float(x[k])


def _selberg_coefficients(J, alpha, beta):
    """Coefficients for ``[alpha, beta]`` as a translate of the centred interval.

    For ``[-L/2, L/2]`` both polynomials are even, so their coefficients are
    real: ``L - a_m sin(pi m L) +- (1 - |m|/(J+1)) cos(pi m L) / (J+1)``
    (with ``a_0 = 0``).  Translation by the centre ``c`` multiplies the
    coefficient at ``m`` by ``e(-m c)``.
    """
    m = np.arange(-J, J + 1)
    k = np.abs(m)
    L = beta - alpha
    a = np.zeros(2 * J + 1)
    nz = k > 0
    # sine coefficients of the sawtooth approximation, indexed by |m|
    a[nz] = -_vaaler_g(k[nz] / (J + 1)) / (np.pi * k[nz])
    base = -a * np.sin(np.pi * k * L)
    base[J] = L
    env = (1.0 - k / (J + 1)) * np.cos(np.pi * k * L) / (J + 1)
    c = 0.5 * (alpha + beta)
    if c == 0:
        shift = np.ones(2 * J + 1, dtype=complex)
    else:
        shift = np.exp(-2j * np.pi * m * c)
    return (base + env) * shift, (base - env) * shift


def selberg_pair(J: int, alpha: float, beta: float, n_grid: int = 10_000,
                 tol: float = 1e-12) -> SelbergPair:
    """Construct and validate the Selberg pair for ``[alpha, beta]``."""
    if J < 1:
        raise InvalidQueryError("J must be at least 1")
    if not alpha < beta < alpha + 1:
        raise InvalidQueryError("need alpha < beta < alpha + 1")
    cp, cm = _selberg_coefficients(J, alpha, beta)
    pair = SelbergPair(J, float(alpha), float(beta), cp, cm)
    viol, where = pair.sandwich_violation(n_grid)
    if viol > tol:
        raise ConstructionError(f"sandwich violated by {viol:.3g}", witness=where)
    for m in range(1, J + 1):
        bound = pair.coefficient_bound(m)
        for c in (cp, cm):
            if max(abs(c[J + m]), abs(c[J - m])) > bound + tol:
                raise ConstructionError(f"coefficient bound violated at j={m}", witness=m)
    return pair


# ---------------------------------------------------------------------------
# Fourier decomposition of the weighted count


@dataclass
class DecompositionCheck:
    Q: int
    delta: float
    J: int
    weighted_count: float
    N0: float
    lhs: float
    rhs: float
    exp_sums: list

    @property
    def holds(self):
        return self.lhs <= self.rhs * (1 + 1e-12) + 1e-12


def decomposition_check(chart, Q: int, delta: float, J: int, weight=None) -> DecompositionCheck:
    """Check ``|N^w - 2 delta N0| <= N0/(J+1) + 2 sum_j b_j |E_j|`` for a curve.

    ``E_j = sum_{q<=Q} sum_a w(a/q) e(j q f(a/q))`` and
    ``b_j = 1/(J+1) + min(2 delta, 1/(pi j))``.
    """
    from .counting import CountQuery, count_near
    from .oscillatory import default_weight

    w = weight if weight is not None else default_weight(chart)
    res = count_near(chart, CountQuery(Q, delta, mode="weighted", weight=w, strict=False))
    lo, hi = w.support_box()
    vals = []
    phases = []
    for q in range(1, Q + 1):
        axes = [np.arange(math.floor(q * a), math.ceil(q * b) + 1) for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.dim) / q
        wv = w(pts)
        m = wv > 0
        vals.append(wv[m])
        phases.append(q * np.asarray(chart.f(pts[m]), dtype=float).reshape(-1))
    wv = np.concatenate(vals)
    ph = np.concatenate(phases)
    N0 = math.fsum(wv)
    sums = []
    for j in range(1, J + 1):
        t = j * ph
        t -= np.round(t)
        z = wv * np.exp(2j * np.pi * t)
        sums.append(complex(math.fsum(z.real), math.fsum(z.imag)))
    rhs = N0 / (J + 1) + 2 * math.fsum(
        (1 / (J + 1) + min(2 * delta, 1 / (math.pi * j))) * abs(s) for j, s in enumerate(sums, 1)
    )
    lhs = abs(res.total - 2 * delta * N0)
    return DecompositionCheck(Q, delta, J, res.total, N0, lhs, rhs, sums)
