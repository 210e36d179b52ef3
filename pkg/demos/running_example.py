"""Walk through the three-action/two-action running example.

Shows the utility polynomial, the ex-ante optimum, and how CDT and EDT
disagree about the strategy (C, X).
"""

from imperfect_recall.builtins import figure1
from imperfect_recall.equilibrium import kkt_certificate, verify_cdt_approx, verify_edt
from imperfect_recall.game import strategy_from_labels
from imperfect_recall.polynomial import format_polynomial, utility_polynomial
from imperfect_recall.solvers import brute_force_grid, solve_exante

g = figure1()
print("U(mu) =", format_polynomial(utility_polynomial(g)))

best = solve_exante(g)
print(f"ex-ante optimum ~ {best.value:.6f} at {best.strategy}")
print("exact grid (k=2):", brute_force_grid(g, 2).value)

c_x = strategy_from_labels(g, {"I1": "C", "I2": "X"})
print("(C, X) is a CDT equilibrium:", verify_cdt_approx(g, c_x, 0).verdict)
edt = verify_edt(g, c_x, 0)
print("(C, X) is an EDT equilibrium:", edt.verdict, "gap", edt.max_gap)
print("KKT certificate for (C, X):", kkt_certificate(g, c_x).valid)
