"""Seeded random instances for property tests and demos."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .game import Chance, Decision, GameTree, Terminal, build_game
from .polynomial import Polynomial


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_game(
    seed,
    max_nodes: int = 12,
    num_info_sets: int | None = None,
    absentminded: bool = True,
    chance: bool = True,
    payoff_range: tuple[int, int] = (-2, 6),
) -> GameTree:
    """A random tree with at most ``max_nodes`` nodes and at least one decision node.

    With ``absentminded=False`` no info set appears twice on a root-to-leaf path.
    Payoffs are integers in ``payoff_range``; chance probabilities are small rationals.
    """
    rng = _rng(seed)
    if max_nodes < 4:
        raise ValueError("need room for a decision node and two leaves")
    k = num_info_sets or int(rng.integers(1, 4))
    sizes = [int(rng.integers(2, 4)) for _ in range(k)]
    labels = [f"I{i + 1}" for i in range(k)]
    actions = {lab: tuple("abc"[:m]) for lab, m in zip(labels, sizes)}

    count = 1  # nodes created so far, children counted when their parent is expanded
    used: set[str] = set()

    def grow(path: frozenset, first: bool):
        nonlocal count
        room = max_nodes - count
        allowed = [lab for lab in labels if absentminded or lab not in path]
        fits = [lab for lab in allowed if len(actions[lab]) <= room]
        r = rng.random()
        if first or (fits and r < 0.55):
            options = fits or allowed
            lab = options[int(rng.integers(len(options)))]
            count += len(actions[lab])
            used.add(lab)
            kids = {}
            for a in actions[lab]:
                kids[a] = grow(path | {lab}, False)
            return Decision(lab, kids)
        if chance and room >= 2 and r < 0.7:
            count += 2
            w = [int(rng.integers(1, 4)) for _ in range(2)]
            total = sum(w)
            return Chance({"u": (Fraction(w[0], total), grow(path, False)),
                           "v": (Fraction(w[1], total), grow(path, False))})
        lo, hi = payoff_range
        return Terminal(int(rng.integers(lo, hi + 1)))

    root = grow(frozenset(), True)
    declared = {lab: actions[lab] for lab in labels if lab in used}
    return build_game(root, declared)


def random_strategy(seed, shape, interior: bool = False) -> tuple:
    """An exact strategy with small denominators; ``interior`` keeps every entry positive."""
    rng = _rng(seed)
    out = []
    for m in shape:
        lo = 1 if interior else 0
        w = [int(rng.integers(lo, 5)) for _ in range(m)]
        if sum(w) == 0:
            w[int(rng.integers(m))] = 1
        total = sum(w)
        out.append(tuple(Fraction(x, total) for x in w))
    return tuple(out)


def random_float_strategy(seed, shape) -> tuple:
    rng = _rng(seed)
    return tuple(tuple(float(v) for v in rng.dirichlet(np.ones(m))) for m in shape)


def random_polynomial(seed, shape=None, terms: int = 4, max_degree: int = 3, coef_range=(-3, 5)) -> Polynomial:
    """Integer-coefficient polynomial over a product of simplices."""
    rng = _rng(seed)
    if shape is None:
        shape = tuple(int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 4))))
    variables = [(i, j) for i, m in enumerate(shape) for j in range(m)]
    out = {}
    for _ in range(terms):
        deg = int(rng.integers(0, max_degree + 1))
        mono: dict = {}
        for _ in range(deg):
            v = variables[int(rng.integers(len(variables)))]
            mono[v] = mono.get(v, 0) + 1
        key = tuple(sorted(mono.items()))
        out[key] = out.get(key, 0) + int(rng.integers(coef_range[0], coef_range[1] + 1))
    return Polynomial(shape, out)


def random_cnf(seed, num_vars: int = 4, num_clauses: int | None = None):
    """Random clauses of width 1 to 3 (repeats and complementary pairs allowed)."""
    from .reductions import Cnf3

    rng = _rng(seed)
    c = num_clauses or int(rng.integers(1, 7))
    clauses = []
    for _ in range(c):
        width = int(rng.integers(1, 4))
        clauses.append(tuple(int(rng.integers(1, num_vars + 1)) * (1 if rng.random() < 0.5 else -1)
                             for _ in range(width)))
    return Cnf3(num_vars, tuple(clauses))


def random_family(seed, states: int = 3):
    """Random common-payoff family with two classes per player and payoffs in {0, 1/2, 1}."""
    from .reductions import CommonPayoffFamily

    rng = _rng(seed)
    names = tuple(f"s{k + 1}" for k in range(states))
    w = [int(rng.integers(1, 4)) for _ in names]
    probs = tuple(Fraction(x, sum(w)) for x in w)
    p1 = {s: f"A{int(rng.integers(1, 3))}" for s in names}
    p2 = {s: f"B{int(rng.integers(1, 3))}" for s in names}
    a1 = {c: ("x", "y") for c in set(p1.values())}
    a2 = {c: ("x", "y") for c in set(p2.values())}
    pay = {}
    for s in names:
        for a, b in itertools.product(("x", "y"), repeat=2):
            pay[(s, a, b)] = Fraction(int(rng.integers(0, 3)), 2)
    return CommonPayoffFamily(names, probs, p1, p2, a1, a2, pay)


def random_polytensor(seed, n: int = 5, m: int = 2, c: int = 5, denominator: int = 4):
    """Tables with entries in {0, 1/den, ..., 1}."""
    from .reductions import PolytensorGame

    rng = _rng(seed)
    tables = {}
    for subset in itertools.combinations(range(n), c):
        vals = rng.integers(0, denominator + 1, size=(m,) * c)
        tables[subset] = np.vectorize(lambda v: Fraction(int(v), denominator), otypes=[object])(vals)
    return PolytensorGame(n, m, tables, c)
