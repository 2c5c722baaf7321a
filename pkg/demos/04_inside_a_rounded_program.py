"""
Inside a rounded branching program
==================================

A look at the breakpoints kept for ``x1 + x2 + x3 <= 9`` on ``{0..5}^3``.
Each layer keeps only the partial sums where the acceptance probability
drops by more than ``1 + eta``. A deliberately coarse ``eta = 1/2`` makes the
rounding visible.
"""

import itertools
from fractions import Fraction as F

from truncvol import evaluate_robp, round_robp_single

u, n, b = 6, 3, 9
tables = [list(range(u))] * n
zprime, robp = round_robp_single(tables, b, u, F(1, 2), eta=F(1, 2))

exact = sum(1 for x in itertools.product(range(u), repeat=n) if sum(x) <= b)
print("exact", exact, " rounded", zprime, " allowed up to", float((1 + robp.eta) ** n * exact))
print(robp.dump())

# Edges out of a breakpoint come in label intervals; here from the value-5 breakpoint of layer 1.
for e in robp.edges(1, 1):
    print(f"labels {e.lo}..{e.hi} -> breakpoint {e.target}")

# Every feasible point is accepted; a few infeasible ones may be as well.
extra = [x for x in itertools.product(range(u), repeat=n) if sum(x) > b and evaluate_robp(robp, x)]
print(len(extra), "infeasible points accepted, for example", extra[:4])
print("accepted in total:", exact + len(extra), "=", zprime)
