"""
A convex separable cut
======================

``x^2 + y^3 + g(z) <= 1`` with ``g`` piecewise linear. There is no closed
form here, so a grid bracket serves as the reference.
"""

from fractions import Fraction as F

from truncvol import Instance, UnivariateFn, find_intercept, volume_convex
from truncvol.oracles import riemann_volume_bounds

g = UnivariateFn.piecewise([(0, 0), (F(1, 2), F(1, 4)), (1, F(3, 2))])
inst = Instance.from_functions([
    ([UnivariateFn.poly([(1, 2)]), UnivariateFn.poly([(1, 3)]), g], 1),
])

# The shortest axis intercept sets the grid resolution.
icpt = find_intercept(inst)
print("per-axis intercepts", [str(v) for v in icpt.per_axis], "->", icpt.ell_prime)

eps = F(1, 2)
est = volume_convex(inst, eps)
print("grid side u =", est.u)
print("estimate", float(est.estimate))

lo, hi = riemann_volume_bounds(inst, 256)
print(f"grid bracket [{float(lo):.5f}, {float(hi):.5f}]")
print("inside the sandwich:", lo <= est.estimate <= (1 + eps) * hi)
