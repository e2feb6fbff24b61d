"""
Poisson summation and Fourier kernels
=====================================

A weighted exponential sum over the lattice ``a/q`` equals ``q^(n-1)``
times a sum of oscillatory integrals over dual frequencies.  Interval
indicators on the circle are replaced by trigonometric polynomials: the
Fejer kernel majorizes a short arc, and the Selberg pair sandwiches any
interval with zeroth coefficients off by exactly ``1/(J+1)``.
"""

import numpy as np

from near_misses.kernels import decomposition_check, fejer_eval, selberg_pair
from near_misses.oscillatory import poisson_check
from near_misses.surfaces import get_surface

# %%
# Both sides of the Poisson identity.
for name, j, q in [("parabola", 3, 17), ("sphere2", 8, 30), ("paraboloid3", 2, 11)]:
    r = poisson_check(get_surface(name), j, q)
    print(f"{name:12s} j={j} q={q:2d}: lattice {r.lattice_sum:.6f}  dual {r.dual_sum:.6f}  "
          f"residual {r.residual:.1e} ({r.n_frequencies} frequencies)")

# %%
# Fejer kernel: ``(pi^2/4) F_J(theta) >= 1`` on ``||theta|| <= 1/(2J)``.
J = 10
theta = np.linspace(-1 / (2 * J), 1 / (2 * J), 5)
print("pi^2/4 F_10 on the arc:", np.round(np.pi**2 / 4 * fejer_eval(J, theta), 4))

# %%
# Selberg pair for ``[-0.1, 0.1]`` with ``J = 9``.
p = selberg_pair(9, -0.1, 0.1)
print(f"S+(0) = {p.coefficient(0, 1).real:.15f}, S-(0) = {p.coefficient(0, -1).real:.15f}")
x = np.array([0.0, 0.1, 0.2, 0.5])
print("S- <= indicator <= S+ at", x, ":", np.round(p.minus(x), 3), np.round(p.plus(x), 3))
print("worst sandwich violation on 10^4 points:", p.sandwich_violation()[0])

# %%
# Together they bound the weighted count by exponential sums.
chk = decomposition_check(get_surface("parabola"), 40, 0.01, 20)
print(f"|N - 2 delta N0| = {chk.lhs:.2f} <= {chk.rhs:.2f}")
