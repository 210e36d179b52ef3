"""Instance generators that turn other problems into imperfect-recall games,
with the precision arithmetic and the maps that carry solutions back.

Every generator returns a :class:`ReductionOutput`; :func:`recover` applies its
recovery map and checks the result against the source instance.
"""

from __future__ import annotations

import hashlib
import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .equilibrium import frequency_lower_bound, well_supported_from_approx
from .game import (
    Chance,
    Decision,
    GameTree,
    Terminal,
    build_game,
    check_strategy,
    to_rational,
)
from .polynomial import (
    Polynomial,
    eu_lipschitz_bound,
    evaluate,
    game_from_polynomial_v2,
)

# --- source instances ----------------------------------------------------------------


@dataclass(frozen=True)
class Cnf3:
    """A CNF formula; literals are signed 1-based variable indices (DIMACS style)."""

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.num_vars < 0:
            raise ValueError("variable count must be nonnegative")
        for c in self.clauses:
            if not c:
                raise ValueError("empty clause")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")

    def satisfied_by(self, assignment: Mapping[int, bool]) -> int:
        """Number of clauses satisfied by ``assignment`` (variable -> truth value)."""
        return sum(any(assignment[abs(l)] == (l > 0) for l in c) for c in self.clauses)

    def satisfiable(self) -> bool:
        return self.max_satisfied() == len(self.clauses)

    def max_satisfied(self) -> int:
        best = 0
        for bits in itertools.product((True, False), repeat=self.num_vars):
            best = max(best, self.satisfied_by(dict(enumerate(bits, start=1))))
        return best


@dataclass(frozen=True)
class CommonPayoffFamily:
    """Two-player identical-interest games G_s played at a random state s.

    Player 1 only learns the class of s in its partition, player 2 the class in
    its own partition; both receive payoff[(s, a, b)] (missing entries are 0).
    """

    states: tuple[str, ...]
    probs: tuple[Fraction, ...]
    p1_class: Mapping[str, str]
    p2_class: Mapping[str, str]
    p1_actions: Mapping[str, tuple[str, ...]]
    p2_actions: Mapping[str, tuple[str, ...]]
    payoff: Mapping[tuple[str, str, str], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.states) != len(self.probs):
            raise ValueError("one probability per state")
        if sum(self.probs, Fraction(0)) != 1 or any(p < 0 for p in self.probs):
            raise ValueError("state distribution must be nonnegative and sum to 1")
        for s in self.states:
            if s not in self.p1_class or s not in self.p2_class:
                raise ValueError(f"state {s} is not covered by both partitions")
        for cls in set(self.p1_class.values()):
            if cls not in self.p1_actions or not self.p1_actions[cls]:
                raise ValueError(f"player-1 class {cls} has no actions")
        for cls in set(self.p2_class.values()):
            if cls not in self.p2_actions or not self.p2_actions[cls]:
                raise ValueError(f"player-2 class {cls} has no actions")

    @property
    def p1_classes(self) -> list[str]:
        return list(dict.fromkeys(self.p1_class[s] for s in self.states))

    @property
    def p2_classes(self) -> list[str]:
        return list(dict.fromkeys(self.p2_class[s] for s in self.states))

    def value(self, mu1: Mapping[str, Sequence], mu2: Mapping[str, Sequence]):
        """Expected common payoff of a profile of per-class mixed actions."""
        total = Fraction(0)
        for s, ps in zip(self.states, self.probs):
            c1, c2 = self.p1_class[s], self.p2_class[s]
            for a, pa in zip(self.p1_actions[c1], mu1[c1]):
                for b, pb in zip(self.p2_actions[c2], mu2[c2]):
                    total = total + ps * pa * pb * self.payoff.get((s, a, b), 0)
        return total


@dataclass(frozen=True)
class PolytensorGame:
    """n players, m actions each; payoff is a sum of tables over c-player subsets (identical interest).

    ``tables`` maps each sorted subset of 0-based players to a float or
    Fraction array of shape (m,)*c indexed by the subset members' actions.
    """

    n: int
    m: int
    tables: Mapping[tuple[int, ...], np.ndarray]
    c: int = 5

    def __post_init__(self):
        if self.n < self.c:
            raise ValueError(f"need at least {self.c} players")
        for subset in itertools.combinations(range(self.n), self.c):
            if subset not in self.tables:
                raise ValueError(f"missing table for players {subset}")
            if np.shape(self.tables[subset]) != (self.m,) * self.c:
                raise ValueError(f"table for {subset} must have shape {(self.m,) * self.c}")

    def subsets(self):
        return list(itertools.combinations(range(self.n), self.c))

    def player_value(self, x: Sequence[Sequence], i: int) -> float:
        """Sum over subsets containing i of the expected table entry under mixed profile x."""
        total = 0.0
        for subset in self.subsets():
            if i not in subset:
                continue
            t = np.asarray(self.tables[subset], dtype=float)
            for player in subset:  # contract one axis per member
                t = np.tensordot(np.asarray(x[player], dtype=float), t, axes=(0, 0))
            total += float(t)
        return total

    def nash_gaps(self, x: Sequence[Sequence]) -> list[float]:
        """Per player, the best pure-deviation gain."""
        gaps = []
        for i in range(self.n):
            base = self.player_value(x, i)
            best = base
            for j in range(self.m):
                dev = [list(b) for b in x]
                dev[i] = [float(k == j) for k in range(self.m)]
                best = max(best, self.player_value(dev, i))
            gaps.append(best - base)
        return gaps


# --- outputs ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Recovery:
    kind: str
    data: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class ReductionOutput:
    game: GameTree
    precision_out: Fraction | None
    params: Mapping[str, object]
    recovery: Recovery
    source: object
    eps: Fraction | None = None
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class RecoveryResult:
    solution: object
    valid: bool
    detail: str = ""


def _fraction(x) -> Fraction:
    return to_rational(x)


def _source_hash(kind: str, source) -> str:
    from .formats import serialize_source

    return hashlib.sha256(serialize_source(kind, source).encode()).hexdigest()[:16]


def _with_provenance(game: GameTree, kind: str, source, params: Mapping, eps) -> GameTree:
    from .formats import format_number, serialize_source

    meta = [("reduction", kind), ("source-sha256", _source_hash(kind, source))]
    if eps is not None:
        meta.append(("eps", format_number(eps)))
    for k, v in params.items():
        meta.append((f"param.{k}", format_number(v) if isinstance(v, (int, Fraction, float)) else str(v)))
    for line in serialize_source(kind, source).splitlines():
        meta.append(("source", line))
    return game.with_meta(meta)


# --- 3SAT ------------------------------------------------------------------------------


def pad_clauses(cnf: Cnf3) -> tuple[Cnf3, list[str]]:
    """Rewrite clauses so each has 3 distinct variables, keeping satisfiability.

    Short clauses are expanded over shared fresh variables in every polarity
    (so the expansion is equivalent whatever their values). A clause with
    complementary literals is always true and becomes a clause over three
    further fresh variables, shared by all such clauses.
    """
    fresh = cnf.num_vars
    pad: list[int] = []
    taut: list[int] = []
    out: list[tuple[int, ...]] = []
    notes = []

    def new_vars(pool: list[int], count: int) -> list[int]:
        nonlocal fresh
        while len(pool) < count:
            fresh += 1
            pool.append(fresh)
        return pool[:count]

    for k, clause in enumerate(cnf.clauses):
        lits = list(dict.fromkeys(clause))
        if any(-l in lits for l in lits):
            out.append(tuple(new_vars(taut, 3)))
            notes.append(f"clause {k + 1} is a tautology; replaced by ({' v '.join('x%d' % v for v in taut)})")
            continue
        need = 3 - len(lits)
        if need < 0:
            raise ValueError(f"clause {k + 1} has more than 3 literals")
        if need == 0:
            out.append(tuple(lits))
            continue
        extra = new_vars(pad, need)
        for signs in itertools.product((1, -1), repeat=need):
            out.append(tuple(lits) + tuple(sg * v for sg, v in zip(signs, extra)))
        notes.append(f"clause {k + 1} padded with {', '.join('x%d' % v for v in extra)} in both polarities")
    return Cnf3(fresh, tuple(out)), notes


def sat3_to_game(cnf: Cnf3) -> ReductionOutput:
    """Chance picks a clause uniformly; the player then sets its three variables.

    One info set per variable (actions T, F). A leaf pays 1 iff the chosen
    values satisfy the clause, so the formula is satisfiable iff some pure
    strategy has ex-ante utility 1 (target t = 1).
    """
    if not cnf.clauses:
        raise ValueError("empty formula")
    padded, notes = pad_clauses(cnf)
    share = Fraction(1, len(padded.clauses))
    info = {f"x{v}": ("T", "F") for v in range(1, padded.num_vars + 1)}

    def subtree(clause, level, values):
        if level == 3:
            sat = any(values[k] == (clause[k] > 0) for k in range(3))
            return Terminal(int(sat))
        var = abs(clause[level])
        return Decision(f"x{var}", {
            "T": subtree(clause, level + 1, values + (True,)),
            "F": subtree(clause, level + 1, values + (False,)),
        })

    root = Chance({f"c{k + 1}": (share, subtree(c, 0, ())) for k, c in enumerate(padded.clauses)})
    game = build_game(root, info)
    params = {"target": Fraction(1), "clauses": len(padded.clauses), "variables": padded.num_vars}
    game = _with_provenance(game, "sat", cnf, params, None)
    recovery = Recovery("sat", {"num_vars": cnf.num_vars, "padded": padded})
    return ReductionOutput(game, None, params, recovery, cnf, None, tuple(notes))


# --- common-payoff families ---------------------------------------------------------------


def common_payoff_to_game(fam: CommonPayoffFamily) -> ReductionOutput:
    """Chance draws the state; player 1 moves at I_class, then player 2 at J_class (depth 3)."""
    info = {}
    for cls in fam.p1_classes:
        info[f"I_{cls}"] = tuple(fam.p1_actions[cls])
    for cls in fam.p2_classes:
        info[f"J_{cls}"] = tuple(fam.p2_actions[cls])
    branches = {}
    for s, ps in zip(fam.states, fam.probs):
        c1, c2 = fam.p1_class[s], fam.p2_class[s]
        branches[s] = (ps, Decision(f"I_{c1}", {
            a: Decision(f"J_{c2}", {b: Terminal(fam.payoff.get((s, a, b), 0)) for b in fam.p2_actions[c2]})
            for a in fam.p1_actions[c1]
        }))
    game = build_game(Chance(branches), info)
    params = {"target": Fraction(1)}
    game = _with_provenance(game, "common-payoff", fam, params, None)
    recovery = Recovery("common_payoff", {"p1": fam.p1_classes, "p2": fam.p2_classes})
    return ReductionOutput(game, None, params, recovery, fam, None)


def split_profile(fam: CommonPayoffFamily, mu) -> tuple[dict, dict]:
    p1, p2 = fam.p1_classes, fam.p2_classes
    blocks = list(mu)
    return dict(zip(p1, blocks[: len(p1)])), dict(zip(p2, blocks[len(p1):]))


# --- KKT points of polynomials over the cube ---------------------------------------------


def lift_to_simplices(p: Polynomial) -> Polynomial:
    """Reinterpret a polynomial in x_1..x_l (blocks of size 1) over l blocks of size 2, x_i = mu_i1."""
    if any(m != 1 for m in p.shape):
        raise ValueError("expected one variable per block (shape (1, ..., 1))")
    return Polynomial((2,) * len(p.shape), list(p))


def cube_kkt_violation(p: Polynomial, x: Sequence) -> float:
    """Largest violation of: x_i > 0 => dp/dx_i >= -eps and x_i < 1 => dp/dx_i <= eps."""
    point = [(v,) for v in x]
    worst = 0.0
    for i in range(len(p.shape)):
        d = float(evaluate(p.partial(i, 0), point))
        if x[i] > 0:
            worst = max(worst, -d)
        if x[i] < 1:
            worst = max(worst, d)
    return worst


def kkt_cube_to_game(p: Polynomial, eps, node_cap: int | None = None) -> ReductionOutput:
    """Game whose utility is p lifted to l two-action info sets (variant-2 construction).

    The precision is delta = min(1/3, eps^2 / (3 L |N|^2)^2), with L the CDT
    Lipschitz bound at the game's constant frequency bound.
    """
    eps = _fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    lifted = lift_to_simplices(p)
    game = game_from_polynomial_v2(lifted, node_cap)
    bound = frequency_lower_bound(game)
    lam = bound.lam
    lip = eu_lipschitz_bound(game, lam)
    n_nodes = game.num_nodes
    delta = min(Fraction(1, 3), eps**2 / (3 * lip * n_nodes**2) ** 2)
    params = {"lambda": lam, "L": lip, "N": n_nodes, "delta": delta}
    game = _with_provenance(game, "kkt-cube", p, params, eps)
    recovery = Recovery("kkt_cube", {"lambda": lam, "L": lip, "delta": delta})
    return ReductionOutput(game, delta, params, recovery, p, eps)


# --- polytensor games ------------------------------------------------------------------------


def _tables_exact(pt: PolytensorGame, subset) -> np.ndarray:
    return np.asarray(pt.tables[subset], dtype=object)


def polytensor_to_game(pt: PolytensorGame, eps) -> ReductionOutput:
    """Chance picks a c-subset of players uniformly; its members then move in index order.

    Each info set is reached with probability c/n regardless of strategy, and
    delta = eps / C(n-1, c-1).
    """
    eps = _fraction(eps)
    info = {f"P{i + 1}": tuple(f"a{j + 1}" for j in range(pt.m)) for i in range(pt.n)}
    subsets = pt.subsets()
    share = Fraction(1, len(subsets))

    def subtree(subset, level, actions):
        if level == len(subset):
            return Terminal(_fraction(_tables_exact(pt, subset)[actions]))
        player = subset[level]
        return Decision(f"P{player + 1}", {
            f"a{j + 1}": subtree(subset, level + 1, actions + (j,)) for j in range(pt.m)
        })

    root = Chance({"S" + "_".join(str(i + 1) for i in s): (share, subtree(s, 0, ())) for s in subsets})
    game = build_game(root, info)
    delta = eps / comb(pt.n - 1, pt.c - 1)
    params = {"delta": delta, "reach": Fraction(pt.c, pt.n)}
    game = _with_provenance(game, "polytensor", pt, params, eps)
    return ReductionOutput(game, delta, params, Recovery("polytensor", {}), pt, eps)


def distinct_players(players: Sequence[int]) -> int:
    """Number of distinct players in a sequence (eta)."""
    return len(set(players))


def single_infoset_params(n: int, m: int, eps, lip, c: int = 5) -> dict:
    """M1, delta1, delta2, M2 for the single-info-set construction, in exact arithmetic."""
    eps = _fraction(eps)
    m1 = Fraction(2 * 100 * n**9 * m**4) / eps
    delta1 = Fraction(1, 5) * (Fraction(1, n) - 1 / m1) ** 4 * eps / 2
    size = sum((n * m) ** k for k in range(c + 1))
    delta2 = (delta1 / (3 * lip * size)) ** 2
    m2 = (delta1 + n**4) * m1**4
    return {"M1": m1, "delta1": delta1, "delta2": delta2, "M2": m2, "H": size}


def polytensor_to_single_infoset_game(pt: PolytensorGame, eps) -> ReductionOutput:
    """All decision nodes in one info set whose actions are (player, action) pairs.

    The tree is the full (nm)-ary tree of depth c without chance nodes. A leaf
    reached by choosing (i_1, j_1), ..., (i_c, j_c) pays M2 * eta(i) plus, when
    the players are all distinct, the table entry of that player set. The
    visit frequency of the info set is c for every strategy.
    """
    eps = _fraction(eps)
    if eps >= 1 or eps <= 0:
        raise ValueError("eps must lie in (0, 1)")
    labels = [(i, j) for i in range(pt.n) for j in range(pt.m)]
    actions = tuple(f"p{i + 1}.{j + 1}" for i, j in labels)
    m1 = Fraction(2 * 100 * pt.n**9 * pt.m**4) / eps
    delta1 = Fraction(1, 5) * (Fraction(1, pt.n) - 1 / m1) ** 4 * eps / 2
    m2 = (delta1 + pt.n**4) * m1**4

    def payoff(path):
        players = [labels[a][0] for a in path]
        eta = distinct_players(players)
        value = m2 * eta
        if eta == pt.c:
            order = sorted(range(pt.c), key=lambda k: players[k])
            subset = tuple(players[k] for k in order)
            value += _fraction(_tables_exact(pt, subset)[tuple(labels[path[k]][1] for k in order)])
        return value

    def subtree(path):
        if len(path) == pt.c:
            return Terminal(payoff(path))
        return Decision("I", {actions[a]: subtree(path + (a,)) for a in range(len(actions))})

    game = build_game(subtree(()), {"I": actions})
    lam = Fraction(pt.c)
    lip = eu_lipschitz_bound(game, lam)
    params = single_infoset_params(pt.n, pt.m, eps, lip, pt.c)
    params.update({"lambda": lam, "L": lip})
    game = _with_provenance(game, "polytensor-1is", pt, params, eps)
    recovery = Recovery("polytensor_single", {"n": pt.n, "m": pt.m, "lambda": lam, "L": lip})
    return ReductionOutput(game, params["delta2"], params, recovery, pt, eps)


def normalize_single_infoset(mu, n: int, m: int) -> tuple[tuple, list[int]]:
    """pi_ij = mu_ij / p_i with p_i the total probability of player i's actions.

    Players with p_i = 0 get the uniform mix and are reported.
    """
    block = list(mu[0])
    out, empty = [], []
    for i in range(n):
        row = block[i * m:(i + 1) * m]
        total = sum(row, 0 * row[0])
        if total > 0:
            out.append(tuple(v / total for v in row))
        else:
            empty.append(i)
            out.append(tuple(Fraction(1, m) for _ in range(m)))
    return tuple(out), empty


# --- recovery ------------------------------------------------------------------------------


def recover(out: ReductionOutput, solution) -> RecoveryResult:
    """Map a solution of the generated game back and check it against the source instance."""
    try:
        mu = check_strategy(out.game, solution)
    except ValueError as exc:
        raise ValueError(f"malformed solution: {exc}") from None
    kind = out.recovery.kind
    if kind == "sat":
        padded: Cnf3 = out.recovery.data["padded"]
        assignment = {}
        for v in range(1, padded.num_vars + 1):
            block = mu[v - 1]
            assignment[v] = block[0] > 0  # first supported action, T before F
        cnf: Cnf3 = out.source
        original = {v: assignment[v] for v in range(1, cnf.num_vars + 1)}
        ok = cnf.satisfied_by(original) == len(cnf.clauses)
        return RecoveryResult(original, ok, "satisfying assignment" if ok else "assignment leaves clauses unsatisfied")
    if kind == "common_payoff":
        fam: CommonPayoffFamily = out.source
        mu1, mu2 = split_profile(fam, mu)
        from .polynomial import utility_polynomial

        game_value = evaluate(utility_polynomial(out.game), mu)
        fam_value = fam.value(mu1, mu2)
        ok = abs(fam_value - game_value) <= (0 if isinstance(fam_value, Fraction) and isinstance(game_value, Fraction) else 1e-9)
        return RecoveryResult((mu1, mu2), bool(ok), f"family value {fam_value}")
    if kind == "kkt_cube":
        data = out.recovery.data
        pi = mu
        if float(data["delta"]) ** 0.5 < 0.5:
            pi = well_supported_from_approx(out.game, mu, data["delta"], data["lambda"], data["L"])
        x = tuple(b[0] for b in pi)
        worst = cube_kkt_violation(out.source, x)
        return RecoveryResult(x, worst <= float(out.eps), f"largest KKT violation {worst:.3g}")
    if kind == "polytensor":
        pt: PolytensorGame = out.source
        gaps = pt.nash_gaps(mu)
        return RecoveryResult(mu, max(gaps) <= float(out.eps), f"largest deviation gain {max(gaps):.3g}")
    if kind == "polytensor_single":
        pt = out.source
        data = out.recovery.data
        pi_in = mu
        if float(out.precision_out) ** 0.5 < 1 / (pt.n * pt.m):
            pi_in = well_supported_from_approx(out.game, mu, out.precision_out, data["lambda"], data["L"])
        x, empty = normalize_single_infoset(pi_in, pt.n, pt.m)
        gaps = pt.nash_gaps(x)
        ok = not empty and max(gaps) <= float(out.eps)
        detail = f"largest deviation gain {max(gaps):.3g}" + (f"; players without mass {empty}" if empty else "")
        return RecoveryResult(x, ok, detail)
    raise ValueError(f"unknown recovery kind {kind!r}")


def rebuild(kind: str, source, eps=None) -> ReductionOutput:
    """Run the reduction named ``kind`` (as used by the CLI and game-file provenance)."""
    if kind == "sat":
        return sat3_to_game(source)
    if kind == "common-payoff":
        return common_payoff_to_game(source)
    if kind == "kkt-cube":
        return kkt_cube_to_game(source, eps)
    if kind == "polytensor":
        return polytensor_to_game(source, eps)
    if kind == "polytensor-1is":
        return polytensor_to_single_infoset_game(source, eps)
    raise ValueError(f"unknown reduction {kind!r}")


REDUCTIONS = ("sat", "common-payoff", "kkt-cube", "polytensor", "polytensor-1is")
