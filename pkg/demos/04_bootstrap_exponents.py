"""
The bootstrap exponent sequence
===============================

Starting from the trivial exponent ``beta_1 = n`` the recursion
``beta_i = n - (n-1) / (2 beta_{i-1} - n + 1)`` transfers a bound for the
dual surface back to the surface and improves the exponent each time.
The arithmetic is exact.
"""

from fractions import Fraction

from near_misses.bootstrap import beta_step, exponent_sequence, iteration_schedule, predicted_bound

# %%
# For n = 3 the sequence is ``2 + 1/i``.
print("n=3:", [str(b) for b in exponent_sequence(3, 8).betas])

# %%
# One step from ``n`` already gives ``n - 1 + 2/(n+1)``.
for n in range(2, 7):
    print(f"n={n}: beta_2 = {beta_step(n, n)} = {n - 1} + {Fraction(2, n + 1)}")

# %%
# For n >= 4 the gap to ``n - 1`` shrinks geometrically by at most ``2/(n-1)``.
seq = exponent_sequence(5, 12)
gaps = [float(seq[i]) - 4 for i in range(1, 13)]
print("n=5 gaps:", " ".join(f"{g:.2e}" for g in gaps))
print("ratios:  ", " ".join(f"{b / a:.3f}" for a, b in zip(gaps, gaps[1:])), "<= 0.5")

# %%
# How many steps the schedule takes at height Q, and the resulting envelope.
for Q in (1e4, 1e8, 1e16):
    pb = predicted_bound(4, Q, 0.0)
    print(f"Q={Q:.0e}: i(Q)={iteration_schedule(4, Q)}, best i={pb.best_i}, envelope {pb.envelope:.3e}")
