"""Single-player extensive-form games with imperfect recall.

A game is an immutable tree of decision, chance and terminal nodes. Decision
nodes are partitioned into information sets that share one ordered action
list. Chance probabilities and payoffs are exact rationals.

Strategies are behavioral: one probability vector per information set, in the
information set's declaration order. A strategy is *exact* when every entry is
an ``int`` or ``Fraction`` and *float* otherwise; every routine in this module
works in either mode and stays exact in the first.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Union

Number = Union[int, Fraction, float]
Block = tuple
Strategy = tuple  # tuple of blocks, one per info set

DECISION = "decision"
CHANCE = "chance"
TERMINAL = "terminal"

FLOAT_SUM_TOL = 1e-12


class GameError(ValueError):
    """Raised for malformed games or unknown nodes / info sets."""


class InvalidStrategy(ValueError):
    """Raised when a strategy does not fit the game or is not a distribution."""


class UnreachedInfoSet(ValueError):
    """Raised when a quantity conditioned on reaching an info set is undefined."""


def to_rational(value) -> Fraction:
    """Convert ints, Fractions, decimal strings and floats to an exact Fraction.

    Floats go through their shortest ``repr`` so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    parent: int | None
    action: str | None  # label of the edge from the parent
    children: tuple[tuple[str, int], ...] = ()
    info_set: int | None = None
    chance_probs: tuple[Fraction, ...] | None = None  # aligned with children
    payoff: Fraction | None = None
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name if self.name is not None else f"n{self.id}"


@dataclass(frozen=True)
class InfoSet:
    label: str
    actions: tuple[str, ...]
    members: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class NodeHistory:
    """Path data of a node: its depth, the nodes from the root and the edge labels."""

    node: int
    depth: int
    node_ancestors: tuple[int, ...]
    action_ancestors: tuple[str, ...]

    def ancestor(self, k: int) -> int:
        if not 0 <= k <= self.depth:
            raise IndexError(f"ancestor index {k} outside 0..{self.depth}")
        return self.node_ancestors[k]

    def action(self, k: int) -> str:
        if not 0 <= k <= self.depth - 1:
            raise IndexError(f"action index {k} outside 0..{self.depth - 1}")
        return self.action_ancestors[k]


@dataclass(frozen=True)
class InfoSetStats:
    info_set: int
    first_entry_nodes: frozenset[int]
    reach_prob: Number
    visit_freq: Number


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class GameTree:
    """An immutable game tree with nodes numbered densely in preorder.

    Construct trees with :func:`build_game` (nested node specs) or
    :func:`imperfect_recall.formats.parse_game`; the raw constructor does no
    checking so that invalid trees can still be inspected by
    :func:`validate_game`.
    """

    nodes: tuple[Node, ...]
    info_sets: tuple[InfoSet, ...]
    meta: tuple[tuple[str, str], ...] = field(default=())

    root: int = 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, GameTree):
            return NotImplemented
        return (self.nodes, self.info_sets) == (other.nodes, other.info_sets)

    def __hash__(self) -> int:
        return hash((self.nodes, self.info_sets))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s.size for s in self.info_sets)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def terminals(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.nodes if n.kind == TERMINAL)

    @cached_property
    def _labels(self) -> dict[str, int]:
        return {s.label: i for i, s in enumerate(self.info_sets)}

    @cached_property
    def _names(self) -> dict[str, int]:
        return {n.name: n.id for n in self.nodes if n.name is not None}

    def info_set_index(self, key: int | str) -> int:
        if isinstance(key, str):
            try:
                return self._labels[key]
            except KeyError:
                raise GameError(f"unknown info set {key!r}") from None
        if not 0 <= key < len(self.info_sets):
            raise GameError(f"unknown info set index {key}")
        return key

    def node_id(self, key: int | str) -> int:
        if isinstance(key, str):
            try:
                return self._names[key]
            except KeyError:
                raise GameError(f"unknown node {key!r}") from None
        if not 0 <= key < len(self.nodes):
            raise GameError(f"unknown node id {key}")
        return key

    def meta_value(self, key: str, default: str | None = None) -> str | None:
        for k, v in self.meta:
            if k == key:
                return v
        return default

    def with_meta(self, meta: Iterable[tuple[str, str]]) -> GameTree:
        return GameTree(self.nodes, self.info_sets, tuple(meta))

    def child(self, node: int, action: str) -> int:
        for label, cid in self.nodes[node].children:
            if label == action:
                return cid
        raise GameError(f"node {node} has no action {action!r}")


# --- building ---------------------------------------------------------------


@dataclass(frozen=True)
class Terminal:
    payoff: Number = 0
    name: str | None = None


@dataclass(frozen=True)
class Decision:
    info_set: str
    children: Mapping[str, object]
    name: str | None = None


@dataclass(frozen=True)
class Chance:
    # action label -> (probability, subtree)
    children: Mapping[str, tuple[Number, object]]
    name: str | None = None


def build_game(
    root,
    info_sets: Mapping[str, Sequence[str]] | None = None,
    meta: Iterable[tuple[str, str]] = (),
    validate: bool = True,
) -> GameTree:
    """Build a :class:`GameTree` from nested :class:`Decision`/:class:`Chance`/:class:`Terminal` specs.

    ``info_sets`` fixes the order of info sets and of their actions. Info sets
    not listed there are appended in order of first appearance (preorder), with
    their actions in the order of that first node's ``children`` mapping.
    Listed info sets may have no member nodes.
    """
    declared: dict[str, tuple[str, ...]] = {k: tuple(v) for k, v in (info_sets or {}).items()}

    todo = [root]
    while todo:
        spec = todo.pop()
        if isinstance(spec, Decision):
            if spec.info_set not in declared:
                declared[spec.info_set] = tuple(spec.children)
            todo.extend(reversed(list(spec.children.values())))
        elif isinstance(spec, Chance):
            todo.extend(sub for _, sub in reversed(list(spec.children.values())))

    order = {label: i for i, label in enumerate(declared)}
    nodes: list[Node] = []
    members: dict[str, list[int]] = {label: [] for label in declared}

    # explicit stack keeps large constructions off the recursion limit
    stack = [(root, None, None, None)]  # spec, parent id, action, slot in parent's child list
    pending_children: dict[int, list] = {}
    while stack:
        spec, parent, action, slot = stack.pop()
        nid = len(nodes)
        nodes.append(None)  # type: ignore[arg-type]
        if parent is not None:
            pending_children[parent][slot] = (action, nid)
        if isinstance(spec, Terminal):
            nodes[nid] = Node(nid, TERMINAL, parent, action, payoff=to_rational(spec.payoff), name=spec.name)
        elif isinstance(spec, Decision):
            actions = declared[spec.info_set]
            if set(spec.children) != set(actions) or len(spec.children) != len(actions):
                raise GameError(
                    f"decision node {spec.name or nid} has actions {list(spec.children)}, "
                    f"info set {spec.info_set} expects {list(actions)}"
                )
            members[spec.info_set].append(nid)
            nodes[nid] = Node(nid, DECISION, parent, action, info_set=order[spec.info_set], name=spec.name)
            pending_children[nid] = [None] * len(actions)
            for k in reversed(range(len(actions))):
                stack.append((spec.children[actions[k]], nid, actions[k], k))
        elif isinstance(spec, Chance):
            labels = list(spec.children)
            probs = tuple(to_rational(spec.children[a][0]) for a in labels)
            nodes[nid] = Node(nid, CHANCE, parent, action, chance_probs=probs, name=spec.name)
            pending_children[nid] = [None] * len(labels)
            for k in reversed(range(len(labels))):
                stack.append((spec.children[labels[k]][1], nid, labels[k], k))
        else:
            raise GameError(f"unknown node spec {spec!r}")

    final = [
        Node(n.id, n.kind, n.parent, n.action, tuple(pending_children.get(n.id, ())), n.info_set,
             n.chance_probs, n.payoff, n.name)
        for n in nodes
    ]
    sets = tuple(InfoSet(label, declared[label], tuple(members[label])) for label in declared)
    tree = GameTree(tuple(final), sets, tuple(meta))
    if validate:
        report = validate_game(tree)
        if not report.ok:
            raise GameError("; ".join(report.problems))
    return tree


def validate_game(tree: GameTree) -> ValidationReport:
    """Check the structural invariants of a game; never raises."""
    problems: list[str] = []
    nodes = tree.nodes
    if not nodes:
        return ValidationReport(("game has no nodes",))
    ids = [n.id for n in nodes]
    if ids != list(range(len(nodes))):
        problems.append("node ids are not dense 0..n-1")
        return ValidationReport(tuple(problems))
    roots = [n.id for n in nodes if n.parent is None]
    if roots != [tree.root]:
        problems.append(f"expected exactly one root (node {tree.root}), found {roots}")
    child_of: dict[int, int] = {}
    for n in nodes:
        labels = [a for a, _ in n.children]
        if len(set(labels)) != len(labels):
            problems.append(f"node {n.id}: duplicate outgoing labels {labels}")
        for a, c in n.children:
            if not 0 <= c < len(nodes):
                problems.append(f"node {n.id}: child id {c} does not exist")
                continue
            if c in child_of:
                problems.append(f"node {c} has more than one parent")
            child_of[c] = n.id
            if nodes[c].parent != n.id or nodes[c].action != a:
                problems.append(f"node {c}: parent/action record disagrees with node {n.id}")
        if n.kind == TERMINAL:
            if n.children:
                problems.append(f"terminal node {n.id} has children")
            if n.payoff is None:
                problems.append(f"terminal node {n.id} has no payoff")
            if n.info_set is not None:
                problems.append(f"terminal node {n.id} belongs to an info set")
        elif n.kind == CHANCE:
            if n.info_set is not None:
                problems.append(f"chance node {n.id} belongs to an info set")
            if not n.children:
                problems.append(f"chance node {n.id} has no children")
            probs = n.chance_probs or ()
            if len(probs) != len(n.children):
                problems.append(f"chance node {n.id}: {len(probs)} probabilities for {len(n.children)} children")
            if any(p < 0 for p in probs):
                problems.append(f"chance node {n.id}: negative probability")
            total = sum(probs, Fraction(0))
            if total != 1:
                problems.append(f"chance node {n.id}: distribution sums to {_show(total)}")
        elif n.kind == DECISION:
            if n.info_set is None or not 0 <= n.info_set < len(tree.info_sets):
                problems.append(f"decision node {n.id} has no valid info set")
            else:
                expected = tree.info_sets[n.info_set].actions
                if tuple(a for a, _ in n.children) != expected:
                    problems.append(
                        f"decision node {n.id}: actions {[a for a, _ in n.children]} "
                        f"differ from info set {tree.info_sets[n.info_set].label} {list(expected)}"
                    )
        else:
            problems.append(f"node {n.id}: unknown kind {n.kind!r}")
    for n in nodes:
        if n.parent is not None and child_of.get(n.id) != n.parent:
            problems.append(f"node {n.id}: not listed among the children of its parent {n.parent}")
    # preorder numbering: parents precede children (cycles are impossible then)
    for n in nodes:
        if n.parent is not None and n.parent >= n.id:
            problems.append(f"node {n.id}: ids are not in preorder")
            break
    seen: dict[int, str] = {}
    labels_seen: set[str] = set()
    for i, s in enumerate(tree.info_sets):
        if s.label in labels_seen:
            problems.append(f"duplicate info set label {s.label}")
        labels_seen.add(s.label)
        if not s.actions:
            problems.append(f"info set {s.label} has no actions")
        if len(set(s.actions)) != len(s.actions):
            problems.append(f"info set {s.label} has duplicate actions")
        for h in s.members:
            if not 0 <= h < len(nodes):
                problems.append(f"info set {s.label}: unknown member {h}")
                continue
            if h in seen:
                problems.append(f"node {h} in info sets {seen[h]} and {s.label}")
            seen[h] = s.label
            if nodes[h].kind != DECISION:
                problems.append(f"info set {s.label}: member {h} is not a decision node")
            elif nodes[h].info_set != i:
                problems.append(f"node {h}: info set record disagrees with {s.label}")
    for n in nodes:
        if n.kind == DECISION and n.id not in seen:
            problems.append(f"decision node {n.id} is in no info set")
    return ValidationReport(tuple(problems))


def _show(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    # terminating decimals read better in messages (0.9 rather than 9/10)
    d = x.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    return str(float(x)) if d == 1 else str(x)


# --- strategies -------------------------------------------------------------


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def check_strategy(tree: GameTree | Sequence[int], mu) -> Strategy:
    """Return ``mu`` as a tuple of tuples after checking it is a valid strategy.

    Exact entries stay exact; if any entry is a float (or numpy scalar) the
    whole strategy is converted to Python floats and block sums are checked to
    within 1e-12.
    """
    shape = tree.shape if isinstance(tree, GameTree) else tuple(tree)
    try:
        blocks = [list(b) for b in mu]
    except TypeError:
        raise InvalidStrategy("strategy must be a sequence of blocks") from None
    if len(blocks) != len(shape):
        raise InvalidStrategy(f"strategy has {len(blocks)} blocks, game has {len(shape)} info sets")
    exact = all(_is_exact(x) for b in blocks for x in b)
    out = []
    for i, (b, m) in enumerate(zip(blocks, shape)):
        if len(b) != m:
            raise InvalidStrategy(f"block {i + 1} has {len(b)} entries, info set has {m} actions")
        if exact:
            vals = tuple(Fraction(x) for x in b)
            if sum(vals, Fraction(0)) != 1:
                raise InvalidStrategy(f"block {i + 1} sums to {sum(vals, Fraction(0))}, not 1")
        else:
            vals = tuple(float(x) for x in b)
            if abs(sum(vals) - 1.0) > FLOAT_SUM_TOL:
                raise InvalidStrategy(f"block {i + 1} sums to {sum(vals)!r}, not 1")
        if any(v < 0 for v in vals):
            raise InvalidStrategy(f"block {i + 1} has a negative entry")
        out.append(vals)
    return tuple(out)


def is_exact_strategy(mu) -> bool:
    return all(_is_exact(x) for b in mu for x in b)


def uniform_strategy(tree: GameTree) -> Strategy:
    return tuple(tuple(Fraction(1, m) for _ in range(m)) for m in tree.shape)


def pure_strategy(tree: GameTree, choices: Sequence[int | str]) -> Strategy:
    """Pure strategy from one action (index or label) per info set."""
    if len(choices) != len(tree.info_sets):
        raise InvalidStrategy("need one choice per info set")
    out = []
    for s, c in zip(tree.info_sets, choices):
        j = s.actions.index(c) if isinstance(c, str) else c
        out.append(tuple(Fraction(int(k == j)) for k in range(s.size)))
    return tuple(out)


def strategy_from_labels(tree: GameTree, spec: Mapping[str, Mapping[str, Number] | str]) -> Strategy:
    """Build a strategy from ``{info set: {action: prob}}``; a bare action label means a pure block.

    Info sets left out are played uniformly.
    """
    blocks = list(uniform_strategy(tree))
    for label, dist in spec.items():
        i = tree.info_set_index(label)
        actions = tree.info_sets[i].actions
        if isinstance(dist, str):
            dist = {dist: 1}
        unknown = set(dist) - set(actions)
        if unknown:
            raise InvalidStrategy(f"info set {label} has no actions {sorted(unknown)}")
        blocks[i] = tuple(dist.get(a, 0) for a in actions)
    return check_strategy(tree, blocks)


def apply_edt_deviation(mu, info_set: int, alpha) -> Strategy:
    """Replace the block of ``info_set`` by ``alpha`` (the whole info set switches)."""
    blocks = [tuple(b) for b in mu]
    if not 0 <= info_set < len(blocks):
        raise InvalidStrategy(f"unknown info set index {info_set}")
    alpha = tuple(alpha)
    if len(alpha) != len(blocks[info_set]):
        raise InvalidStrategy(
            f"deviation has {len(alpha)} entries, info set has {len(blocks[info_set])} actions"
        )
    blocks[info_set] = alpha
    return tuple(blocks)


# --- histories and reach probabilities ---------------------------------------


def history(tree: GameTree, node: int | str) -> NodeHistory:
    h = tree.node_id(node)
    path, acts = [h], []
    cur = tree.nodes[h]
    while cur.parent is not None:
        acts.append(cur.action)
        path.append(cur.parent)
        cur = tree.nodes[cur.parent]
    path.reverse()
    acts.reverse()
    return NodeHistory(h, len(acts), tuple(path), tuple(acts))


def is_ancestor(tree: GameTree, a: int, b: int) -> bool:
    """True iff ``a`` lies on the path from the root to ``b`` (``b`` included)."""
    cur: int | None = b
    while cur is not None:
        if cur == a:
            return True
        if cur < a:  # preorder: ancestors have smaller ids
            return False
        cur = tree.nodes[cur].parent
    return False


def edge_probs(tree: GameTree, mu) -> list[tuple]:
    """Per node, the probabilities of its outgoing edges under ``mu``."""
    out: list[tuple] = []
    for n in tree.nodes:
        if n.kind == DECISION:
            out.append(tuple(mu[n.info_set]))
        elif n.kind == CHANCE:
            out.append(n.chance_probs)
        else:
            out.append(())
    return out


def reach_probabilities(tree: GameTree, mu, start: int | None = None) -> list:
    """Prob(h | mu, start) for every node h; zero outside the subtree of ``start``."""
    start = tree.root if start is None else start
    exact = is_exact_strategy(mu)
    reach = [Fraction(0) if exact else 0.0] * tree.num_nodes
    reach[start] = Fraction(1) if exact else 1.0
    probs = edge_probs(tree, mu)
    # preorder ids: parents come first, and nodes outside the subtree inherit zeros
    for n in tree.nodes[start:]:
        r = reach[n.id]
        for (_, c), p in zip(n.children, probs[n.id]):
            reach[c] = r * p
    return reach


def reach_prob(tree: GameTree, mu, source: int | str, target: int | str):
    """Product of edge probabilities from ``source`` down to ``target``; 0 if off-path."""
    mu = check_strategy(tree, mu)
    s, t = tree.node_id(source), tree.node_id(target)
    exact = is_exact_strategy(mu)
    if not is_ancestor(tree, s, t):
        return Fraction(0) if exact else 0.0
    prob = Fraction(1) if exact else 1.0
    cur = t
    while cur != s:
        n = tree.nodes[cur]
        parent = tree.nodes[n.parent]
        k = [a for a, _ in parent.children].index(n.action)
        prob = prob * (mu[parent.info_set][k] if parent.kind == DECISION else parent.chance_probs[k])
        cur = n.parent
    return prob


def node_values(tree: GameTree, mu) -> list:
    """U(mu | h) for every node h, by one bottom-up pass."""
    exact = is_exact_strategy(mu)
    vals: list = [None] * tree.num_nodes
    probs = edge_probs(tree, mu)
    for n in reversed(tree.nodes):
        if n.kind == TERMINAL:
            vals[n.id] = n.payoff if exact else float(n.payoff)
        else:
            acc = Fraction(0) if exact else 0.0
            for (_, c), p in zip(n.children, probs[n.id]):
                if p:
                    acc += p * vals[c]
            vals[n.id] = acc
    return vals


def expected_utility(tree: GameTree, mu, at: int | str | None = None):
    mu = check_strategy(tree, mu)
    h = tree.root if at is None else tree.node_id(at)
    return node_values(tree, mu)[h]


def first_entry_nodes(tree: GameTree, info_set: int) -> frozenset[int]:
    members = set(tree.info_sets[info_set].members)
    first = set()
    for h in members:
        cur = tree.nodes[h].parent
        while cur is not None and cur not in members:
            cur = tree.nodes[cur].parent
        if cur is None:
            first.add(h)
    return frozenset(first)


def info_set_stats(tree: GameTree, mu, info_set: int | str) -> InfoSetStats:
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    reach = reach_probabilities(tree, mu)
    first = first_entry_nodes(tree, i)
    zero = Fraction(0) if is_exact_strategy(mu) else 0.0
    prob = sum((reach[h] for h in sorted(first)), zero)
    freq = sum((reach[h] for h in tree.info_sets[i].members), zero)
    return InfoSetStats(i, first, prob, freq)


def has_absentmindedness(tree: GameTree) -> bool:
    for n in tree.nodes:
        if n.kind != DECISION:
            continue
        cur = n.parent
        while cur is not None:
            if tree.nodes[cur].info_set == n.info_set:
                return True
            cur = tree.nodes[cur].parent
    return False


def depth(tree: GameTree) -> int:
    """Length of the longest root-to-leaf path in edges."""
    d = [0] * tree.num_nodes
    for n in tree.nodes[1:]:
        d[n.id] = d[n.parent] + 1
    return max(d)
