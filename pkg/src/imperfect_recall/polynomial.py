"""Sparse polynomials over products of simplices.

Variables are indexed ``(i, j)``: block ``i`` (an info set), coordinate ``j``
(an action), both 0-based internally and 1-based when printed (``m13`` is block
1, action 3). A monomial is stored as a sorted tuple of ``((i, j), exponent)``
pairs with positive exponents only; the empty tuple is the constant monomial.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction
from functools import cached_property

import numpy as np

from .game import (
    CHANCE,
    DECISION,
    TERMINAL,
    Chance,
    Decision,
    GameTree,
    Terminal,
    build_game,
    first_entry_nodes,
)
from .limits import BudgetExceeded, default_node_budget

Var = tuple[int, int]
Monomial = tuple[tuple[Var, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


def _is_zero(c) -> bool:
    return c == 0


class Polynomial:
    """Immutable sparse polynomial with a fixed block shape.

    Coefficients are normally Fractions; floats are allowed (e.g. after
    substituting a float strategy) and arithmetic stays in whatever mode the
    inputs are in.
    """

    __slots__ = ("__dict__", "_shape", "_terms")

    def __init__(self, shape: Sequence[int], terms: Mapping[Monomial, object] | Iterable = ()):
        self._shape = tuple(int(m) for m in shape)
        merged: dict[Monomial, object] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for mono, c in items:
            mono = tuple(sorted((tuple(v), int(e)) for v, e in mono if e))
            for (i, j), e in mono:
                if not (0 <= i < len(self._shape) and 0 <= j < self._shape[i]) or e < 0:
                    raise ValueError(f"variable {(i, j)}^{e} does not fit shape {self._shape}")
            merged[mono] = merged.get(mono, 0) + c
        self._terms = {m: c for m, c in sorted(merged.items()) if not _is_zero(c)}

    # -- construction helpers
    @classmethod
    def constant(cls, shape: Sequence[int], c=1) -> Polynomial:
        return cls(shape, {(): Fraction(c) if not isinstance(c, float) else c})

    @classmethod
    def variable(cls, shape: Sequence[int], i: int, j: int) -> Polynomial:
        return cls(shape, {(((i, j), 1),): Fraction(1)})

    # -- basic data
    @property
    def shape(self) -> tuple[int, ...]:
        return self._shape

    @property
    def terms(self) -> dict[Monomial, object]:
        return dict(self._terms)

    @property
    def num_vars(self) -> int:
        return sum(self._shape)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    @property
    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    @property
    def constant_term(self):
        return self._terms.get((), Fraction(0))

    def coefficient_sum(self):
        """Sum of absolute coefficients, a bound on |p| over the unit cube."""
        return sum((abs(c) for c in self._terms.values()), Fraction(0))

    def variables(self) -> set[Var]:
        return {v for m in self._terms for v, _ in m}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._shape == other._shape and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self._shape, tuple(self._terms.items())))

    def __repr__(self) -> str:
        return f"Polynomial(shape={self._shape}, {format_polynomial(self)!r})"

    def __str__(self) -> str:
        return format_polynomial(self)

    # -- arithmetic
    def _check(self, other: Polynomial) -> None:
        if self._shape != other._shape:
            raise ValueError(f"shape mismatch {self._shape} vs {other._shape}")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self._shape, other)
        self._check(other)
        return Polynomial(self._shape, list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self._shape, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self._shape, {m: c * other for m, c in self._terms.items()})
        self._check(other)
        out: list = []
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                out.append((_mono_mul(m1, m2), c1 * c2))
        return Polynomial(self._shape, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = Polynomial.constant(self._shape, 1)
        for _ in range(k):
            result = result * self
        return result

    # -- calculus
    def partial(self, i: int, j: int) -> Polynomial:
        if not (0 <= i < len(self._shape) and 0 <= j < self._shape[i]):
            raise IndexError(f"variable {(i, j)} out of range for shape {self._shape}")
        out = []
        for mono, c in self._terms.items():
            exps = dict(mono)
            e = exps.get((i, j), 0)
            if e:
                exps[(i, j)] = e - 1
                out.append((tuple(exps.items()), c * e))
        return Polynomial(self._shape, out)

    def all_vars(self) -> list[Var]:
        return [(i, j) for i, m in enumerate(self._shape) for j in range(m)]

    # -- evaluation
    def __call__(self, point):
        return evaluate(self, point)

    def substitute(self, values: Mapping[int, Sequence]) -> Polynomial:
        """Fix whole blocks to the given vectors; the result keeps the same shape."""
        out = []
        for mono, c in self._terms.items():
            keep = []
            coef = c
            for (i, j), e in mono:
                if i in values:
                    coef = coef * values[i][j] ** e
                else:
                    keep.append(((i, j), e))
            out.append((tuple(keep), coef))
        return Polynomial(self._shape, out)

    def restrict_to_block(self, mu, i: int) -> Polynomial:
        """U(mu_1, ..., y, ..., mu_l) as a polynomial in block ``i`` alone."""
        return self.substitute({k: b for k, b in enumerate(mu) if k != i})

    def on_simplex(self) -> Polynomial:
        """Canonical form on the product of simplices.

        Eliminates the last coordinate of every block via mu_{i,m_i} = 1 - sum of
        the others. Two polynomials agree on the whole strategy space iff their
        reduced forms are equal.
        """
        cache: dict[tuple[int, int], Polynomial] = {}

        def last_power(i: int, e: int) -> Polynomial:
            key = (i, e)
            if key not in cache:
                base = Polynomial.constant(self._shape, 1)
                for j in range(self._shape[i] - 1):
                    base = base - Polynomial.variable(self._shape, i, j)
                cache[key] = base ** e
            return cache[key]

        total = Polynomial(self._shape)
        for mono, c in self._terms.items():
            keep = []
            factor = Polynomial.constant(self._shape, c)
            for (i, j), e in mono:
                if j == self._shape[i] - 1:
                    factor = factor * last_power(i, e)
                else:
                    keep.append(((i, j), e))
            total = total + factor * Polynomial(self._shape, {tuple(keep): Fraction(1)})
        return total

    @cached_property
    def compiled(self) -> CompiledPolynomial:
        return CompiledPolynomial(self)


class CompiledPolynomial:
    """Float64 evaluation of a polynomial and its gradient on flat vectors."""

    def __init__(self, p: Polynomial):
        self.shape = p.shape
        self.offsets = np.concatenate([[0], np.cumsum(p.shape)]).astype(int)
        n = int(self.offsets[-1])
        self.n = n
        self.exps, self.coefs = self._arrays(p, n)
        self.grad_parts = []
        for (i, j) in p.all_vars():
            self.grad_parts.append(self._arrays(p.partial(i, j), n))

    def _arrays(self, p: Polynomial, n: int):
        exps = np.zeros((len(p), n), dtype=np.int64)
        coefs = np.zeros(len(p))
        for t, (mono, c) in enumerate(p):
            coefs[t] = float(c)
            for (i, j), e in mono:
                exps[t, self.offsets[i] + j] = e
        return exps, coefs

    @staticmethod
    def _eval(exps, coefs, x) -> float:
        if not len(coefs):
            return 0.0
        return float(coefs @ np.prod(x[None, :] ** exps, axis=1))

    def value(self, x: np.ndarray) -> float:
        return self._eval(self.exps, self.coefs, x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.array([self._eval(e, c, x) for e, c in self.grad_parts])

    def values(self, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
        """Evaluate at many points (rows of ``points``)."""
        points = np.atleast_2d(points)
        out = np.zeros(len(points))
        if not len(self.coefs):
            return out
        for s in range(0, len(points), chunk):
            block = points[s:s + chunk]
            out[s:s + chunk] = np.prod(block[:, None, :] ** self.exps[None, :, :], axis=2) @ self.coefs
        return out


# --- evaluation on strategy-shaped points ---------------------------------------


def _check_point(p: Polynomial, point) -> list:
    blocks = [list(b) for b in point]
    if [len(b) for b in blocks] != list(p.shape):
        raise ValueError(f"point shape {[len(b) for b in blocks]} does not match {list(p.shape)}")
    return blocks


def evaluate(p: Polynomial, point):
    """Sum over terms of coefficient times the product of powers; exact for rational points."""
    blocks = _check_point(p, point)
    exact = all(isinstance(x, (int, Fraction)) for b in blocks for x in b)
    total = Fraction(0) if exact else 0.0
    for mono, c in p:
        term = c
        for (i, j), e in mono:
            term = term * blocks[i][j] ** e
        total = total + term
    return total


def partial(p: Polynomial, i: int, j: int, point):
    return evaluate(p.partial(i, j), point)


def gradient(p: Polynomial, point) -> tuple:
    _check_point(p, point)
    return tuple(
        tuple(evaluate(p.partial(i, j), point) for j in range(m)) for i, m in enumerate(p.shape)
    )


def lipschitz_bound(p: Polynomial):
    """Largest coefficient sum over the partial derivatives of ``p``.

    This bounds the sup norm of the gradient on the unit cube, i.e. a Lipschitz
    constant with respect to the l1 distance. See :func:`lipschitz_bound_linf`
    for a constant that is valid for the max-norm distance.
    """
    return max((p.partial(i, j).coefficient_sum() for i, j in p.all_vars()), default=Fraction(0))


def lipschitz_bound_linf(p: Polynomial):
    """Sum of the partial-derivative coefficient sums: |p(x)-p(y)| <= L*max|x-y| on the cube."""
    return sum((p.partial(i, j).coefficient_sum() for i, j in p.all_vars()), Fraction(0))


# --- polynomials attached to a game --------------------------------------------


def _path_monomials(tree: GameTree) -> list[tuple[Fraction, Monomial]]:
    """Per node, the chance-probability product and the monomial of decision edges on its path."""
    out: list = [None] * tree.num_nodes
    out[tree.root] = (Fraction(1), ())
    for n in tree.nodes:
        coef, mono = out[n.id]
        if n.kind == DECISION:
            for j, (_, c) in enumerate(n.children):
                out[c] = (coef, _mono_mul(mono, (((n.info_set, j), 1),)))
        elif n.kind == CHANCE:
            for p, (_, c) in zip(n.chance_probs, n.children):
                out[c] = (coef * p, mono)
    return out


def utility_polynomial(tree: GameTree) -> Polynomial:
    """U(mu) = sum over terminals of u(z) times the probabilities along the path to z."""
    paths = _path_monomials(tree)
    terms = []
    for n in tree.nodes:
        if n.kind == TERMINAL and n.payoff:
            coef, mono = paths[n.id]
            terms.append((mono, coef * n.payoff))
    return Polynomial(tree.shape, terms)


def frequency_polynomial(tree: GameTree, info_set: int) -> Polynomial:
    """Fr(I | mu) = sum of reach probabilities of all nodes of I."""
    paths = _path_monomials(tree)
    return Polynomial(tree.shape, [(paths[h][1], paths[h][0]) for h in tree.info_sets[info_set].members])


def reach_polynomial(tree: GameTree, info_set: int) -> Polynomial:
    """Prob(I | mu) = sum of reach probabilities of the first-entry nodes of I."""
    paths = _path_monomials(tree)
    return Polynomial(
        tree.shape, [(paths[h][1], paths[h][0]) for h in sorted(first_entry_nodes(tree, info_set))]
    )


def constant_frequencies(tree: GameTree) -> dict[str, tuple[Fraction, Fraction]] | None:
    """Per info set label, (Fr, Prob) if both are strategy-independent, else None.

    Constancy is decided symbolically on the product of simplices (see
    :meth:`Polynomial.on_simplex`).
    """
    out = {}
    for i, s in enumerate(tree.info_sets):
        fr = frequency_polynomial(tree, i).on_simplex()
        pr = reach_polynomial(tree, i).on_simplex()
        if not (fr.is_constant() and pr.is_constant()):
            return None
        out[s.label] = (fr.constant_term, pr.constant_term)
    return out


def eu_lipschitz_bound(tree: GameTree, lam, clamp: bool = True):
    """Lipschitz constant (max-norm) of the maps mu -> EU_CDT,GT(a_j | mu, I_i).

    Follows the quotient-rule bound L_ij = (|N|*B1 + B2*B3) / lam^2 where
    B1 bounds the gradient of dU/dmu_ij, B2 bounds |dU/dmu_ij| and B3 bounds the
    gradient of Fr(I_i | .). Gradients are bounded in the l1 sense (sum over
    coordinates of coefficient sums), which is what a max-norm Lipschitz
    constant needs. Info sets whose frequency is identically zero are skipped.
    """
    lam = Fraction(lam) if not isinstance(lam, float) else Fraction(repr(lam))
    if lam <= 0:
        raise ValueError("lambda must be positive")
    u = utility_polynomial(tree)
    n_nodes = tree.num_nodes
    best = Fraction(0)
    for i, s in enumerate(tree.info_sets):
        fr = frequency_polynomial(tree, i)
        if fr.on_simplex().is_zero():
            continue
        b3 = lipschitz_bound_linf(fr)
        for j in range(s.size):
            g = u.partial(i, j)
            b1 = lipschitz_bound_linf(g)
            b2 = g.coefficient_sum()
            best = max(best, (n_nodes * b1 + b2 * b3) / lam**2)
    return max(Fraction(1), best) if clamp else best


# --- games from polynomials ----------------------------------------------------


def _labels(shape: Sequence[int]) -> dict[str, tuple[str, ...]]:
    return {f"I{i + 1}": tuple(f"a{j + 1}" for j in range(m)) for i, m in enumerate(shape)}


def _walk(mono: Monomial) -> list[Var]:
    # supp(D)^ms in lexicographic order: each variable repeated by its exponent
    return [v for v, e in mono for _ in range(e)]


def _payoff(c):
    return c if isinstance(c, Fraction) else Fraction(c)


def game_from_polynomial_v1(p: Polynomial) -> GameTree:
    """Game whose utility polynomial is ``p``: one spine per monomial.

    A chance root picks a monomial uniformly. Along its spine each decision
    node belongs to the info set of the next variable; leaving the spine ends
    the game with payoff 0, and the end of the spine pays coefficient * |supp(p)|.
    """
    info = _labels(p.shape)
    if p.is_zero():
        return build_game(Terminal(0), info)
    k = len(p)
    share = Fraction(1, k)
    branches = {}
    for t, (mono, c) in enumerate(p):
        sub: object = Terminal(_payoff(c) * k)
        for i, j in reversed(_walk(mono)):
            actions = info[f"I{i + 1}"]
            sub = Decision(f"I{i + 1}", {a: (sub if jj == j else Terminal(0)) for jj, a in enumerate(actions)})
        branches[f"t{t + 1}"] = (share, sub)
    return build_game(Chance(branches), info)


def v2_node_count(p: Polynomial) -> int:
    total = 1
    for mono, _ in p:
        width = 1
        total += 1
        for i, _ in _walk(mono):
            width *= p.shape[i]
            total += width
    return total


def game_from_polynomial_v2(p: Polynomial, node_cap: int | None = None) -> GameTree:
    """Like v1, but every monomial gets a full tree with no early terminals.

    Every root-to-leaf path of the subtree for monomial D visits the same info
    sets, so visit frequencies do not depend on the strategy.
    """
    info = _labels(p.shape)
    if p.is_zero():
        return build_game(Terminal(0), info)
    cap = default_node_budget() if node_cap is None else node_cap
    size = v2_node_count(p)
    if size > cap:
        raise BudgetExceeded(f"variant-2 game would have {size} nodes, cap is {cap}")
    k = len(p)
    share = Fraction(1, k)
    branches = {}
    for t, (mono, c) in enumerate(p):
        walk = _walk(mono)
        prize = _payoff(c) * k

        def subtree(level: int, on_path: bool):
            if level == len(walk):
                return Terminal(prize if on_path else 0)
            i, j = walk[level]
            actions = info[f"I{i + 1}"]
            return Decision(
                f"I{i + 1}",
                {a: subtree(level + 1, on_path and jj == j) for jj, a in enumerate(actions)},
            )

        branches[f"t{t + 1}"] = (share, subtree(0, True))
    return build_game(Chance(branches), info)


def v2_frequencies(p: Polynomial) -> dict[str, tuple[Fraction, Fraction]]:
    """Closed form of (Fr, Prob) per info set in the variant-2 game of ``p``."""
    k = len(p)
    out = {}
    for i in range(len(p.shape)):
        fr = Fraction(0)
        pr = Fraction(0)
        for mono, _ in p:
            visits = sum(e for (ii, _), e in mono if ii == i)
            fr += Fraction(visits, k)
            pr += Fraction(int(visits >= 1), k)
        out[f"I{i + 1}"] = (fr, pr)
    return out


# --- text form -----------------------------------------------------------------


def _var_name(i: int, j: int) -> str:
    if i < 9 and j < 9:
        return f"m{i + 1}{j + 1}"
    return f"m[{i + 1},{j + 1}]"


def _coef_text(c) -> str:
    if isinstance(c, int):
        return str(c)
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return repr(float(c))


def format_polynomial(p: Polynomial) -> str:
    """Human-readable text such as ``5·m11·m13·m21 + m13·m22``; ``0`` for the zero polynomial."""
    if p.is_zero():
        return "0"
    parts = []
    for k, (mono, c) in enumerate(p):
        neg = c < 0
        mag = -c if neg else c
        factors = [_var_name(i, j) + (f"^{e}" if e > 1 else "") for (i, j), e in mono]
        if mag != 1 or not factors:
            factors.insert(0, _coef_text(mag))
        body = "·".join(factors)
        if k == 0:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append(("- " if neg else "+ ") + body)
    return " ".join(parts)
