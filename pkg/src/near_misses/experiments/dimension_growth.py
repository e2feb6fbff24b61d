"""Rational points on graphs of codimension ``k`` via projection to a hypersurface.

A manifold ``X = {(x, f_1(x), ..., f_k(x))}`` over ``U`` has property P when
some direction ``u`` makes the Hessian of ``u . f`` nonsingular.  With
``u = s / r`` (integer ``s``, ``|s| = r``) every rational point of ``X`` of
denominator ``q`` maps to a rational point of the hypersurface
``y = u . f(x)`` of denominator ``r q``.  Distinct points stay distinct, so

    N_X(B) <= N_S(r B, 0),

where ``N_X`` counts distinct points and ``N_S`` counts pairs ``(a, q)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ..counting import count_on
from ..errors import PropertyPWitnessError
from .._parallel import parallel_map
from ..surfaces import Domain, MongeChart, parabola, polynomial_chart, sphere_patch
from .stats import growth_exponent

__all__ = [
    "PropertyPManifold",
    "find_witness_direction",
    "DimensionGrowthRow",
    "dimension_growth_count",
    "dimension_growth_sweep",
    "manifold_catalog",
    "get_manifold",
]


@dataclass
class PropertyPManifold:
    """Graph of ``components`` over a common domain.

    ``coefficients`` (one exponent->rational map per component) enables
    rational combinations ``u . f``; charts with an exact lift but no
    polynomial form (the circle) support only ``k = 1``.
    """

    name: str
    components: list
    coefficients: Optional[list] = None
    witness: Optional[tuple] = None  # integer numerators s
    witness_r: int = 1

    @property
    def domain(self) -> Domain:
        return self.components[0].domain

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def codim(self) -> int:
        return len(self.components)

    @property
    def ambient_dim(self) -> int:
        return self.dim + self.codim

    def projected_chart(self, s=None, r=None) -> MongeChart:
        """Hypersurface chart of ``(s . f) / r``."""
        s = tuple(self.witness if s is None else s)
        r = self.witness_r if r is None else r
        if self.codim == 1 and s == (r,):
            return self.components[0]
        if self.coefficients is None:
            raise PropertyPWitnessError(f"{self.name}: combinations need polynomial components")
        combo = {}
        for si, coeffs in zip(s, self.coefficients):
            for e, c in coeffs.items():
                combo[e] = combo.get(e, Fraction(0)) + Fraction(si, r) * Fraction(c)
        return polynomial_chart(f"{self.name}@{s}/{r}", combo, self.domain,
                                provenance=f"projection of {self.name}")

    def projected_hessian_det(self, s, r, n_per_axis=41):
        pts = self.domain.sample_grid(n_per_axis)
        H = sum((si / r) * np.asarray(c.hess(pts)) for si, c in zip(s, self.components))
        return np.abs(np.linalg.det(H))


def _unit_numerators(k, r):
    """Integer vectors ``s`` with ``|s| = r``, positive-first order."""
    rng = range(r, -r - 1, -1)
    out = []
    for s in itertools.product(rng, repeat=k):
        if sum(v * v for v in s) == r * r:
            out.append(s)
    return out


def find_witness_direction(manifold: PropertyPManifold, r_max: int = 50, c_min: float = 1e-9,
                           n_per_axis: int = 41):
    """First rational unit direction ``s/r`` (``r`` ascending) with nonsingular Hessian.

    Returns ``(s, r, min |det|)``.
    """
    for r in range(1, r_max + 1):
        for s in _unit_numerators(manifold.codim, r):
            if math.gcd(*s, r) != 1:
                continue
            m = float(np.min(manifold.projected_hessian_det(s, r, n_per_axis)))
            if m > c_min:
                return s, r, m
    raise PropertyPWitnessError(f"{manifold.name}: no witness direction with r <= {r_max}")


def _ensure_witness(manifold):
    if manifold.witness is None:
        s, r, _ = find_witness_direction(manifold)
        manifold.witness, manifold.witness_r = s, r
    return manifold


def count_points_on_manifold(manifold: PropertyPManifold, B: int, threads: int = 1) -> int:
    """Distinct rational points of ``X`` with common denominator at most ``B``."""

    def one(q):
        A = manifold.domain.lattice_slice(q)
        if len(A) == 0:
            return 0
        ok = np.ones(len(A), dtype=bool)
        bs = []
        for c in manifold.components:
            okc, b = c.lift(A, q)
            ok &= okc
            bs.append(np.asarray(b))
        if not ok.any():
            return 0
        cols = [A[ok][:, i].astype(object) for i in range(A.shape[1])]
        cols += [b[ok].astype(object) for b in bs]
        # primitive representatives: one per point
        g = [math.gcd(*(int(v) for v in row), q) for row in zip(*cols)]
        return sum(1 for v in g if v == 1)

    return sum(parallel_map(one, list(range(int(B), 0, -1)), threads))


@dataclass(frozen=True)
class DimensionGrowthRow:
    B: int
    count: int
    bound_count: int

    @property
    def dominated(self):
        return self.count <= self.bound_count


def dimension_growth_count(manifold: PropertyPManifold, B: int, threads: int = 1):
    """``N_X(B)`` and ``N_S(rB, 0)``; both by exact integer enumeration."""
    _ensure_witness(manifold)
    nx = count_points_on_manifold(manifold, B, threads)
    chart = manifold.projected_chart()
    ns = count_on(chart, manifold.witness_r * int(B), threads=threads).total
    return DimensionGrowthRow(int(B), int(nx), int(ns))


def dimension_growth_sweep(manifold, Bs: Sequence[int], threads: int = 1):
    rows = [dimension_growth_count(manifold, B, threads) for B in Bs]
    fit = growth_exponent([r.B for r in rows], [r.count for r in rows]) if len(rows) >= 4 else None
    return rows, fit


# ---------------------------------------------------------------------------
# Catalog


def _parabola_manifold():
    chart = parabola()
    return PropertyPManifold("parabola", [chart], [{(2,): Fraction(1)}])


def _circle_manifold():
    return PropertyPManifold("circle", [sphere_patch(2)], None, witness=(1,), witness_r=1)


def _twisted_cubic():
    dom = Domain.box([0], [1], closed=True)
    sq = {(2,): Fraction(1)}
    cu = {(3,): Fraction(1)}
    comps = [polynomial_chart("t^2", sq, dom), polynomial_chart("t^3", cu, dom)]
    return PropertyPManifold("twisted_cubic", comps, [sq, cu])


_MANIFOLDS = {
    "parabola": _parabola_manifold,
    "circle": _circle_manifold,
    "twisted_cubic": _twisted_cubic,
}


def manifold_catalog():
    return sorted(_MANIFOLDS)


def get_manifold(name: str) -> PropertyPManifold:
    try:
        return _MANIFOLDS[name]()
    except KeyError:
        raise KeyError(f"unknown manifold {name!r}; choose from {manifold_catalog()}") from None
