"""Turn a small 3-CNF formula into a game, solve it and read back an assignment."""

from imperfect_recall.reductions import Cnf3, recover, sat3_to_game
from imperfect_recall.solvers import brute_force_grid

cnf = Cnf3(3, ((1, 2, -3), (-1, 3), (2,)))
out = sat3_to_game(cnf)
print(f"game: {out.game.num_nodes} nodes, {len(out.game.info_sets)} info sets")
for note in out.notes:
    print(" ", note)

best = brute_force_grid(out.game, 1)  # pure strategies suffice for target 1
print("best pure value:", best.value)
result = recover(out, best.strategy)
print("assignment:", result.solution, "valid:", result.valid)
