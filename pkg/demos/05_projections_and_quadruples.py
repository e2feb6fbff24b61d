"""
Dimension growth, quadruples and a flat Fermat end
==================================================

Three consequences of the counting bounds checked by enumeration: points
on a curve in higher codimension are bounded by points on a projected
hypersurface; near-solutions of ``m1^a + m2^a = m3^a + m4^a`` scale like
``delta M^3``; and a flat point on the Fermat quartic pushes its count
above the generic ``delta Q^2`` shape.
"""

from near_misses.experiments import (
    dimension_growth_sweep,
    fermat_excess_sweep,
    find_witness_direction,
    get_manifold,
    robert_sargos_brute,
    robert_sargos_count,
    rs_sweep,
)

# %%
# The twisted cubic ``(t, t^2, t^3)`` projects along ``u = (1, 0)`` onto the
# parabola.  Every point above has a point below.
cubic = get_manifold("twisted_cubic")
print("witness direction:", find_witness_direction(cubic)[:2])
for name in ("twisted_cubic", "circle"):
    rows, fit = dimension_growth_sweep(get_manifold(name), [125, 250, 500, 1000])
    print(name, [(r.B, r.count, r.bound_count) for r in rows], f"slope {fit.slope:.2f}")

# %%
# Quadruples: the sorted-sum count agrees with brute force, and scales like
# ``delta M^3``.
print("M=30:", robert_sargos_count(30, 0.1, 1.5), "brute force:", robert_sargos_brute(30, 0.1, 1.5))
rows, fit = rs_sweep([50, 100, 200, 400], 0.1, 1.5)
print("counts:", [r.count for r in rows], f"growth exponent {fit.slope:.2f}")

# %%
# Fermat quartic with its flat end at x = 0 included.
rep = fermat_excess_sweep([200, 400, 800, 1600])
print(f"slope {rep.slope:.3f}: above delta Q^2 ({rep.conjecture_slope}), "
      f"flat-end prediction {rep.lower_bound_slope}")
