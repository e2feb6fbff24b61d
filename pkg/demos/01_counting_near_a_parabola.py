"""
Counting rational points near a parabola
========================================

A rational point ``a/q`` is "near" the curve ``y = f(x)`` when
``q f(a/q)`` is within ``delta`` of an integer.  This walk-through counts
such points on the parabola, separates exact points from near misses and
compares the count with the heuristic main term ``delta Q^2``.
"""

import math

from near_misses.counting import CountQuery, count_coprime, count_near, count_on, main_term
from near_misses.oscillatory import default_weight
from near_misses.surfaces import get_surface

parabola = get_surface("parabola")

# %%
# Points exactly on the curve need ``q | a^2``.  Their number grows like
# ``Q log Q`` and is at least ``sum_{q <= sqrt Q} q`` (take ``q = d^2``).
for Q in (10, 100, 1000):
    exact = count_on(parabola, Q).total
    r = math.isqrt(Q)
    print(f"Q={Q:5d}  on the curve: {exact:6d}   lower bound: {r * (r + 1) // 2}")

# %%
# Near misses: the count grows like ``delta Q^2`` once ``delta`` is not
# too small.  Candidates whose distance ties with ``delta`` (to rounding)
# are counted in both modes and reported as ambiguous.
for delta in (0.25, 0.1, 0.01):
    strict = count_near(parabola, CountQuery(400, delta, strict=True))
    loose = count_near(parabola, CountQuery(400, delta, strict=False))
    print(f"delta={delta:<5}  strict {strict.total:7d}  nonstrict {loose.total:7d}  "
          f"ties flagged {strict.ambiguous}  delta Q^2 = {delta * 400**2:.0f}")

# %%
# With a smooth weight the count approaches ``(2 w_hat(0) / n) delta Q^n``.
para3 = get_surface("paraboloid3")
w = default_weight(para3)
for Q in (100, 200, 400):
    q = CountQuery(Q, Q**-0.5, mode="weighted", weight=w)
    res = count_near(para3, q)
    print(f"paraboloid Q={Q}: weighted count {res.total:.1f}, main term {main_term(q, para3):.1f}, "
          f"ratio {res.total / main_term(q, para3):.4f}")

# %%
# Primitive representatives, counted directly and by Moebius inversion.
res = count_coprime(parabola, CountQuery(100, 0.05), check=True)
print(f"primitive near misses up to Q=100: {res.total} (Moebius: {res.mobius_total})")
