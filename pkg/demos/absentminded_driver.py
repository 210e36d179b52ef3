"""The driver who cannot tell the two junctions apart.

Utility is c(1 - c) in the continue probability c; the optimum is c = 1/2.
"""

from fractions import Fraction

from imperfect_recall.builtins import absentminded_driver
from imperfect_recall.equilibrium import (
    frequency_lower_bound,
    verify_cdt_approx,
    verify_edt,
)
from imperfect_recall.game import expected_utility
from imperfect_recall.solvers import projected_gradient_kkt

g = absentminded_driver()
for c in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
    print(f"U(c={c}) = {expected_utility(g, ((c, 1 - c),))}")

res = projected_gradient_kkt(g)
print(f"projected gradient: c = {res.strategy[0][0]:.9f}, residual {res.kkt_residual:.2e}")

half = ((Fraction(1, 2), Fraction(1, 2)),)
print("c = 1/2 CDT equilibrium:", verify_cdt_approx(g, half, 0).verdict)
print("c = 1/2 EDT equilibrium:", verify_edt(g, half, 0).verdict)
print("frequency lower bound:", frequency_lower_bound(g).lam)
