"""
Legendre duals and stationary phase
===================================

The Fourier transform of a near-miss count is governed by oscillatory
integrals ``I(j, k; q)``.  Their size is controlled by the Legendre dual
``f*`` of the surface: frequencies with ``k/j`` inside the gradient image
``V`` of the weight's support have a stationary point; the rest decay fast.
"""

import numpy as np

from near_misses.counting import BumpWeight
from near_misses.duality import dual_geometry, dual_residuals, legendre_dual
from near_misses.oscillatory import (
    OscillatoryQuery,
    classify_k,
    nonstationary_decay,
    stationary_phase_approx,
    stationary_phase_sweep,
)
from near_misses.surfaces import get_surface, paraboloid

# %%
# The parabola ``y = x^2`` has dual ``y^2 / 4``; the sphere cap's dual is
# concave, and taking the dual twice returns the original function.
par = get_surface("parabola")
ys = np.array([[0.4], [1.0], [1.6]])
print("parabola dual at 0.4, 1.0, 1.6:", legendre_dual(par).f(ys), "expected", ys[:, 0] ** 2 / 4)
for name in ("sphere3", "rs"):
    r = dual_residuals(get_surface(name))
    print(f"{name}: f** - f = {r.involution:.1e}, Hessian reciprocity {r.hessian_reciprocity:.1e}")

# %%
# Frequency classes for a paraboloid with a bump of radius 0.3: V is a
# disc of radius 0.3 and the shell around it has width 0.25.
ch = paraboloid(3, lo=-0.8, hi=0.8)
w = BumpWeight((0.0, 0.0), 0.3)
geo = dual_geometry(ch, w)
for k in [(1, 1), (4, 0), (100, 0)]:
    print(f"j=10, k={k}: {classify_k(10, k, geo).name}")

# %%
# Inside V the leading stationary-phase term captures the integral up to
# an error of order ``lambda^-(n+1)/2``.
res = stationary_phase_approx(OscillatoryQuery(ch, 10, (1, 1), 50, w))
print(f"quadrature {res.value:.3e}\nleading    {res.leading:.3e}")
rep = stationary_phase_sweep(get_surface("paraboloid2"), 2, (1,), [50, 158, 500, 1581, 5000])
print(f"error slope on a curve: {rep.slope:.3f} (expected {rep.expected})")

# %%
# Far outside V the integral decays faster than any power of q.
rep = nonstationary_decay(ch, 10, (10, 0), [1, 2, 3, 4, 6, 8, 10], w, geo)
print("|I| for q = 1..10:", " ".join(f"{v:.1e}" for v in rep.errors))
print(f"fitted decay exponent {rep.slope:.2f}")
