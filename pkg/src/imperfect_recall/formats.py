"""Text formats: games, strategies, polynomials, source instances and reports.

Game file (one record per line, ``#`` starts a comment)::

    version 1
    node 0 chance - - root
    node 1 decision 0 heads h1
    infoset I1 actions L R members 1 4
    chance 0 heads=1/2 tails=1/2
    payoff 2 5
    meta key free text

Node ids in a file may be any distinct integers; parsing renumbers them in
preorder. Children of a decision node follow its info set's action order,
children of a chance node the order of its ``chance`` record.
"""

from __future__ import annotations

import hashlib
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .game import (
    CHANCE,
    DECISION,
    TERMINAL,
    Chance,
    Decision,
    GameError,
    GameTree,
    InvalidStrategy,
    Terminal,
    build_game,
    check_strategy,
)
from .polynomial import Polynomial, format_polynomial

VERSION = "1"
_TOKEN = re.compile(r"\S+")
_NUMBER = re.compile(r"^[+-]?(\d+(/\d+)?|\d*\.\d+([eE][+-]?\d+)?|\d+\.?\d*[eE][+-]?\d+|\d+\.)$")


class FormatError(ValueError):
    """A parse error; carries the 1-based line and column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


def format_number(x) -> str:
    """Rationals as ``num/den`` (lowest terms), integers plainly, floats by shortest repr."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def parse_number(text: str, exact: bool = True, line: int | None = None, column: int | None = None):
    """Parse ``3``, ``-1/2`` or a decimal; decimals become floats unless ``exact``."""
    t = text.strip()
    if not _NUMBER.match(t):
        raise FormatError(f"malformed number {text!r}", line, column)
    if "/" in t:
        num, den = t.split("/")
        if int(den) == 0:
            raise FormatError(f"zero denominator in {text!r}", line, column)
        return Fraction(int(num), int(den))
    if re.fullmatch(r"[+-]?\d+", t):
        return Fraction(int(t))
    return Fraction(t) if exact else float(t)


def _tokens(line: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]


def _lines(text: str):
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        toks = _tokens(body)
        if toks:
            yield n, raw, toks


def _check_token(s: str, what: str) -> str:
    if not s or any(ch.isspace() for ch in s) or s.startswith("#") or "=" in s or s == "-":
        raise ValueError(f"{what} {s!r} cannot be written as a token")
    return s


# --- games -----------------------------------------------------------------------------


def serialize_game(tree: GameTree, include_meta: bool = True) -> str:
    out = [f"version {VERSION}"]
    for n in tree.nodes:
        parent = "-" if n.parent is None else str(n.parent)
        action = "-" if n.action is None else _check_token(n.action, "action")
        rec = f"node {n.id} {n.kind} {parent} {action}"
        if n.name is not None:
            rec += " " + _check_token(n.name, "node name")
        out.append(rec)
    for s in tree.info_sets:
        out.append(
            f"infoset {_check_token(s.label, 'info set label')} actions "
            + " ".join(_check_token(a, "action") for a in s.actions)
            + " members" + "".join(f" {m}" for m in s.members)
        )
    for n in tree.nodes:
        if n.kind == CHANCE:
            out.append(f"chance {n.id} " + " ".join(
                f"{a}={format_number(p)}" for (a, _), p in zip(n.children, n.chance_probs)))
    for n in tree.nodes:
        if n.kind == TERMINAL:
            out.append(f"payoff {n.id} {format_number(n.payoff)}")
    if include_meta:
        for k, v in tree.meta:
            out.append(f"meta {_check_token(k, 'meta key')} {v}".rstrip())
    return "\n".join(out) + "\n"


def game_hash(tree: GameTree) -> str:
    """Short content hash of a game's structure (metadata excluded)."""
    return hashlib.sha256(serialize_game(tree, include_meta=False).encode()).hexdigest()[:16]


@dataclass
class _RawNode:
    kind: str
    parent: int | None
    action: str | None
    name: str | None
    line: int


def parse_game(text: str) -> GameTree:
    """Parse a game file; structural problems raise :class:`FormatError` with a line number."""
    nodes: dict[int, _RawNode] = {}
    infosets: dict[str, tuple[tuple[str, ...], list[int], int]] = {}
    chance: dict[int, tuple[list[tuple[str, Fraction]], int]] = {}
    payoffs: dict[int, Fraction] = {}
    meta: list[tuple[str, str]] = []
    version_seen = False

    def int_tok(tok, col, n):
        try:
            return int(tok)
        except ValueError:
            raise FormatError(f"expected a node id, got {tok!r}", n, col) from None

    for n, raw, toks in _lines(text):
        head, col = toks[0]
        if head == "version":
            if len(toks) != 2 or toks[1][0] != VERSION:
                raise FormatError(f"unsupported version (expected 'version {VERSION}')", n, col)
            version_seen = True
        elif head == "node":
            if len(toks) not in (5, 6):
                raise FormatError("node record needs: node ID KIND PARENT ACTION [NAME]", n, col)
            nid = int_tok(*toks[1], n)
            kind, kcol = toks[2]
            if kind not in (DECISION, CHANCE, TERMINAL):
                raise FormatError(f"unknown node kind {kind!r}", n, kcol)
            if nid in nodes:
                raise FormatError(f"duplicate node id {nid}", n, toks[1][1])
            parent = None if toks[3][0] == "-" else int_tok(*toks[3], n)
            action = None if toks[4][0] == "-" else toks[4][0]
            if (parent is None) != (action is None):
                raise FormatError("parent and incoming action must both be given or both be '-'", n, toks[3][1])
            name = toks[5][0] if len(toks) == 6 else None
            nodes[nid] = _RawNode(kind, parent, action, name, n)
        elif head == "infoset":
            words = [t for t, _ in toks]
            if len(words) < 3 or words[2] != "actions" or "members" not in words:
                raise FormatError("infoset record needs: infoset LABEL actions A... members ID...", n, col)
            label = words[1]
            k = words.index("members")
            actions = tuple(words[3:k])
            if not actions:
                raise FormatError(f"info set {label} has no actions", n, col)
            if len(set(actions)) != len(actions):
                raise FormatError(f"info set {label} repeats an action", n, col)
            if label in infosets:
                raise FormatError(f"duplicate info set {label}", n, toks[1][1])
            members = [int_tok(t, c, n) for t, c in toks[k + 1:]]
            infosets[label] = (actions, members, n)
        elif head == "chance":
            if len(toks) < 3:
                raise FormatError("chance record needs: chance ID ACTION=PROB...", n, col)
            nid = int_tok(*toks[1], n)
            dist = []
            for tok, c in toks[2:]:
                if "=" not in tok:
                    raise FormatError(f"expected ACTION=PROB, got {tok!r}", n, c)
                a, p = tok.split("=", 1)
                dist.append((a, parse_number(p, exact=True, line=n, column=c + len(a) + 1)))
            total = sum((p for _, p in dist), Fraction(0))
            if total != 1:
                raise FormatError(f"chance node {nid}: distribution sums to {format_number(total)}, not 1", n, col)
            chance[nid] = (dist, n)
        elif head == "payoff":
            if len(toks) != 3:
                raise FormatError("payoff record needs: payoff ID VALUE", n, col)
            payoffs[int_tok(*toks[1], n)] = parse_number(toks[2][0], exact=True, line=n, column=toks[2][1])
        elif head == "meta":
            if len(toks) < 2:
                raise FormatError("meta record needs a key", n, col)
            key, kcol = toks[1]
            value = raw.split("#", 1)[0][kcol - 1 + len(key):].strip()
            meta.append((key, value))
        else:
            raise FormatError(f"unknown record {head!r}", n, col)

    if not version_seen:
        raise FormatError("missing 'version' record", 1, 1)
    if not nodes:
        raise FormatError("game has no nodes")

    owner: dict[int, str] = {}
    for label, (actions, members, n) in infosets.items():
        for m in members:
            if m not in nodes:
                raise FormatError(f"info set {label} lists unknown node {m}", n)
            if nodes[m].kind != DECISION:
                raise FormatError(f"info set {label} lists non-decision node {m}", n)
            if m in owner:
                raise FormatError(f"node {m} is in two info sets", n)
            owner[m] = label

    children: dict[int, dict[str, int]] = {nid: {} for nid in nodes}
    roots = []
    for nid, rn in nodes.items():
        if rn.parent is None:
            roots.append(nid)
            continue
        if rn.parent not in nodes:
            raise FormatError(f"node {nid}: unknown parent {rn.parent}", rn.line)
        if rn.action in children[rn.parent]:
            raise FormatError(f"node {rn.parent} has two children via action {rn.action!r}", rn.line)
        children[rn.parent][rn.action] = nid
    if len(roots) != 1:
        raise FormatError(f"expected exactly one root, found {len(roots)}")

    def spec(nid: int, trail: frozenset):
        if nid in trail:
            raise FormatError(f"cycle through node {nid}", nodes[nid].line)
        rn = nodes[nid]
        kids = children[nid]
        trail = trail | {nid}
        if rn.kind == TERMINAL:
            if kids:
                raise FormatError(f"terminal node {nid} has children", rn.line)
            if nid not in payoffs:
                raise FormatError(f"terminal node {nid} has no payoff record", rn.line)
            return Terminal(payoffs[nid], rn.name)
        if rn.kind == DECISION:
            if nid not in owner:
                raise FormatError(f"decision node {nid} is in no info set", rn.line)
            label = owner[nid]
            actions = infosets[label][0]
            if set(kids) != set(actions):
                raise FormatError(
                    f"decision node {nid} has child actions {sorted(kids)}, info set {label} expects {list(actions)}",
                    rn.line)
            return Decision(label, {a: spec(kids[a], trail) for a in actions}, rn.name)
        if nid not in chance:
            raise FormatError(f"chance node {nid} has no chance record", rn.line)
        dist, line = chance[nid]
        if set(kids) != {a for a, _ in dist} or len(dist) != len(kids):
            raise FormatError(f"chance node {nid}: record actions {[a for a, _ in dist]} do not match children {sorted(kids)}", line)
        return Chance({a: (p, spec(kids[a], trail)) for a, p in dist}, rn.name)

    for nid in payoffs:
        if nid not in nodes or nodes[nid].kind != TERMINAL:
            raise FormatError(f"payoff record for non-terminal or unknown node {nid}")

    import sys

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * len(nodes) + 100))
    try:
        root = spec(roots[0], frozenset())
    finally:
        sys.setrecursionlimit(limit)
    reached = _count(root)
    if reached != len(nodes):
        raise FormatError(f"{len(nodes) - reached} node(s) not connected to the root")
    try:
        return build_game(root, {label: v[0] for label, v in infosets.items()}, meta)
    except GameError as exc:
        raise FormatError(str(exc)) from None


def _count(spec) -> int:
    total, todo = 0, [spec]
    while todo:
        s = todo.pop()
        total += 1
        if isinstance(s, Decision):
            todo.extend(s.children.values())
        elif isinstance(s, Chance):
            todo.extend(sub for _, sub in s.children.values())
    return total


# --- strategies --------------------------------------------------------------------------


def format_strategy(mu) -> str:
    """Inline form ``(1/2, 0, 1/2); (1, 0)``."""
    return "; ".join("(" + ", ".join(format_number(v) for v in b) + ")" for b in mu)


def serialize_strategy(tree: GameTree, mu, mode: str = "auto") -> str:
    """File form with the game hash; ``mode`` is ``exact``, ``decimal`` or ``auto``."""
    mu = check_strategy(tree, mu)
    if mode == "decimal":
        fmt = lambda v: repr(float(v))
    elif mode == "exact":
        fmt = lambda v: format_number(Fraction(v) if isinstance(v, float) else v)
    else:
        fmt = format_number
    lines = [f"strategy {VERSION}", f"game {game_hash(tree)}"]
    for s, b in zip(tree.info_sets, mu):
        lines.append(f"block {s.label} " + " ".join(fmt(v) for v in b))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ParsedStrategy:
    strategy: tuple
    warnings: tuple[str, ...] = ()


def parse_strategy_text(text: str, tree: GameTree, exact: bool | None = None) -> ParsedStrategy:
    """Parse either the inline form or the file form and validate against ``tree``.

    Decimal entries make the strategy floating point unless ``exact`` is True;
    ``exact=False`` forces floats.
    """
    warnings = []
    body = text.strip()
    if body.startswith("strategy"):
        blocks: dict[str, list[tuple[str, int, int]]] = {}
        for n, _, toks in _lines(body):
            head = toks[0][0]
            if head == "strategy":
                continue
            if head == "game":
                if len(toks) == 2 and toks[1][0] != game_hash(tree):
                    warnings.append(f"strategy was written for game {toks[1][0]}, this game is {game_hash(tree)}")
                continue
            if head != "block" or len(toks) < 3:
                raise FormatError("expected 'block LABEL P...'", n, toks[0][1])
            blocks[toks[1][0]] = [(t, n, c) for t, c in toks[2:]]
        missing = [s.label for s in tree.info_sets if s.label not in blocks]
        if missing:
            raise InvalidStrategy(f"no block for info set(s) {missing}")
        extra = sorted(set(blocks) - {s.label for s in tree.info_sets})
        if extra:
            raise InvalidStrategy(f"unknown info set(s) {extra}")
        raw = [blocks[s.label] for s in tree.info_sets]
    else:
        raw = []
        for k, chunk in enumerate(body.split(";")):
            c = chunk.strip()
            if c.startswith("(") and c.endswith(")"):
                c = c[1:-1]
            elif "(" in c or ")" in c:
                raise FormatError(f"unbalanced parentheses in block {k + 1}", 1)
            raw.append([(t.strip(), 1, None) for t in c.split(",") if t.strip()])
    decimal = any("." in t or "e" in t.lower() for b in raw for t, _, _ in b)
    as_exact = exact if exact is not None else not decimal
    mu = [tuple(parse_number(t, exact=as_exact, line=n, column=c) for t, n, c in b) for b in raw]
    if not as_exact:
        mu = [tuple(float(v) for v in b) for b in mu]
    return ParsedStrategy(check_strategy(tree, mu), tuple(warnings))


def parse_strategy(text: str, tree: GameTree, exact: bool | None = None) -> tuple:
    return parse_strategy_text(text, tree, exact).strategy


# --- polynomials ---------------------------------------------------------------------------

_FACTOR = re.compile(r"m(?:(\d)(\d)|\[(\d+),(\d+)\])(?:\^(\d+))?")


def parse_polynomial(text: str, shape: Sequence[int] | None = None) -> Polynomial:
    """Parse the text written by :func:`format_polynomial` (``*`` also works as a separator).

    A leading ``shape 3 2`` line fixes the block sizes; otherwise each block
    is as large as its largest index used.
    """
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if lines and lines[0].startswith("shape"):
        try:
            shape = tuple(int(t) for t in lines[0].split()[1:])
        except ValueError:
            raise FormatError("shape line must list positive integers", 1) from None
        lines = lines[1:]
    expr = " ".join(lines).replace("·", "*").replace("−", "-")
    if not expr:
        raise FormatError("empty polynomial")
    terms = []
    pos = 0
    for m in re.finditer(r"([+-]?)\s*([^+-]+)", expr.replace(" ", "")):
        if m.start() != pos:
            raise FormatError(f"unexpected text near {expr[pos:m.start() + 1]!r}", 1, pos + 1)
        pos = m.end()
        sign = -1 if m.group(1) == "-" else 1
        coef = Fraction(sign)
        mono: dict[tuple[int, int], int] = {}
        for factor in m.group(2).split("*"):
            f = _FACTOR.fullmatch(factor)
            if f:
                if f.group(1) is not None:
                    i, j = int(f.group(1)), int(f.group(2))
                else:
                    i, j = int(f.group(3)), int(f.group(4))
                if i < 1 or j < 1:
                    raise FormatError(f"variable indices start at 1: {factor!r}", 1)
                e = int(f.group(5) or 1)
                mono[(i - 1, j - 1)] = mono.get((i - 1, j - 1), 0) + e
            else:
                coef *= parse_number(factor, exact=True)
        terms.append((coef, mono))
    if pos != len(expr.replace(" ", "")):
        raise FormatError("trailing text in polynomial", 1, pos + 1)
    if shape is None:
        blocks = max((i for _, mono in terms for i, _ in mono), default=-1) + 1
        sizes = [1] * blocks
        for _, mono in terms:
            for i, j in mono:
                sizes[i] = max(sizes[i], j + 1)
        shape = tuple(sizes)
    shape = tuple(shape)
    for _, mono in terms:
        for i, j in mono:
            if i >= len(shape) or j >= shape[i]:
                raise FormatError(f"variable m[{i + 1},{j + 1}] outside shape {shape}")
    p = Polynomial(shape, {})
    for coef, mono in terms:
        p = p + Polynomial(shape, {tuple(sorted(mono.items())): coef})
    return p


def serialize_polynomial(p: Polynomial) -> str:
    return "shape " + " ".join(str(m) for m in p.shape) + "\n" + format_polynomial(p) + "\n"


# --- source instances ----------------------------------------------------------------------


def parse_dimacs(text: str):
    from .reductions import Cnf3

    num_vars = None
    declared = None
    clauses, current = [], []
    for n, raw, toks in _lines(text):
        if toks[0][0] == "c" or toks[0][0] == "%":
            continue
        if toks[0][0] == "p":
            if len(toks) != 4 or toks[1][0] != "cnf":
                raise FormatError("problem line must be 'p cnf VARS CLAUSES'", n, 1)
            num_vars, declared = int(toks[2][0]), int(toks[3][0])
            continue
        if num_vars is None:
            raise FormatError("clause before the problem line", n, 1)
        for tok, col in toks:
            try:
                lit = int(tok)
            except ValueError:
                raise FormatError(f"expected a literal, got {tok!r}", n, col) from None
            if abs(lit) > num_vars:
                raise FormatError(f"literal {lit} exceeds declared variable count {num_vars}", n, col)
            if lit == 0:
                if not current:
                    raise FormatError("empty clause", n, col)
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if num_vars is None:
        raise FormatError("missing problem line")
    if declared is not None and declared != len(clauses):
        raise FormatError(f"problem line declares {declared} clauses, found {len(clauses)}")
    return Cnf3(num_vars, tuple(clauses))


def serialize_dimacs(cnf) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    lines += [" ".join(str(l) for l in c) + " 0" for c in cnf.clauses]
    return "\n".join(lines) + "\n"


def serialize_family(fam) -> str:
    lines = ["family 1"]
    for s, p in zip(fam.states, fam.probs):
        lines.append(f"state {s} {format_number(p)} {fam.p1_class[s]} {fam.p2_class[s]}")
    for c in fam.p1_classes:
        lines.append(f"actions1 {c} " + " ".join(fam.p1_actions[c]))
    for c in fam.p2_classes:
        lines.append(f"actions2 {c} " + " ".join(fam.p2_actions[c]))
    for (s, a, b), v in sorted(fam.payoff.items(), key=lambda kv: (fam.states.index(kv[0][0]), kv[0][1], kv[0][2])):
        if v:
            lines.append(f"payoff {s} {a} {b} {format_number(v)}")
    return "\n".join(lines) + "\n"


def parse_family(text: str):
    """``state S PROB CLASS1 CLASS2``, ``actions1 CLASS A...``, ``actions2 CLASS B...``, ``payoff S A B V``."""
    from .reductions import CommonPayoffFamily

    states, probs, c1, c2, a1, a2, pay = [], [], {}, {}, {}, {}, {}
    for n, _, toks in _lines(text):
        w = [t for t, _ in toks]
        head = w[0]
        if head == "family":
            continue
        if head == "state" and len(w) == 5:
            states.append(w[1])
            probs.append(parse_number(w[2], exact=True, line=n, column=toks[2][1]))
            c1[w[1]], c2[w[1]] = w[3], w[4]
        elif head in ("actions1", "actions2") and len(w) >= 3:
            (a1 if head == "actions1" else a2)[w[1]] = tuple(w[2:])
        elif head == "payoff" and len(w) == 5:
            pay[(w[1], w[2], w[3])] = parse_number(w[4], exact=True, line=n, column=toks[4][1])
        else:
            raise FormatError(f"unrecognized family record {head!r}", n, toks[0][1])
    try:
        return CommonPayoffFamily(tuple(states), tuple(probs), c1, c2, a1, a2, pay)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def serialize_polytensor(pt) -> str:
    lines = [f"polytensor n {pt.n} m {pt.m} c {pt.c}"]
    for subset in pt.subsets():
        table = np.asarray(pt.tables[subset], dtype=object).reshape(-1)
        lines.append("table " + " ".join(str(i + 1) for i in subset) + " : "
                     + " ".join(format_number(v) for v in table))
    return "\n".join(lines) + "\n"


def parse_polytensor(text: str):
    """Header ``polytensor n N m M c C`` then ``table P1 .. PC : v...`` with entries in row-major order."""
    from .reductions import PolytensorGame

    header = None
    tables = {}
    for n, raw, toks in _lines(text):
        w = [t for t, _ in toks]
        if w[0] == "polytensor":
            if len(w) != 7 or w[1::2] != ["n", "m", "c"]:
                raise FormatError("header must be 'polytensor n N m M c C'", n, 1)
            header = (int(w[2]), int(w[4]), int(w[6]))
        elif w[0] == "table":
            if header is None:
                raise FormatError("table before header", n, 1)
            if ":" not in w:
                raise FormatError("table record needs ':' before the entries", n, 1)
            k = w.index(":")
            subset = tuple(int(t) - 1 for t in w[1:k])
            nn, m, c = header
            if len(subset) != c or sorted(set(subset)) != list(subset) or min(subset) < 0 or max(subset) >= nn:
                raise FormatError(f"table needs {c} increasing player indices in 1..{nn}", n, toks[1][1])
            vals = [parse_number(t, exact=True, line=n, column=col) for t, col in toks[k + 1:]]
            if len(vals) != m**c:
                raise FormatError(f"table has {len(vals)} entries, expected {m ** c}", n, toks[0][1])
            tables[subset] = np.array(vals, dtype=object).reshape((m,) * c)
        else:
            raise FormatError(f"unrecognized polytensor record {w[0]!r}", n, 1)
    if header is None:
        raise FormatError("missing polytensor header")
    try:
        return PolytensorGame(header[0], header[1], tables, header[2])
    except ValueError as exc:
        raise FormatError(str(exc)) from None


_SOURCE_KIND = {
    "sat": "dimacs",
    "common-payoff": "family",
    "kkt-cube": "polynomial",
    "polytensor": "polytensor",
    "polytensor-1is": "polytensor",
}


def serialize_source(kind: str, source) -> str:
    fmt = _SOURCE_KIND[kind]
    if fmt == "dimacs":
        return serialize_dimacs(source)
    if fmt == "family":
        return serialize_family(source)
    if fmt == "polynomial":
        return serialize_polynomial(source)
    return serialize_polytensor(source)


def parse_source(kind: str, text: str):
    if kind not in _SOURCE_KIND:
        raise FormatError(f"unknown reduction {kind!r}")
    fmt = _SOURCE_KIND[kind]
    if fmt == "dimacs":
        return parse_dimacs(text)
    if fmt == "family":
        return parse_family(text)
    if fmt == "polynomial":
        return parse_polynomial(text)
    return parse_polytensor(text)


# --- reports ----------------------------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, Fraction, float, np.floating, np.integer)):
        return format_number(v if not isinstance(v, (np.floating, np.integer)) else v.item())
    if v is None:
        return "none"
    if isinstance(v, tuple) and v and all(isinstance(b, tuple) for b in v):
        return format_strategy(v)
    if isinstance(v, (list, tuple)):
        return " ".join(format_value(x) for x in v)
    return str(v)


def emit_report(pairs: Iterable[tuple[str, object]]) -> str:
    """Line-oriented ``key: value`` text in the given order."""
    lines = []
    for k, v in pairs:
        text = format_value(v)
        if "\n" in text:
            raise ValueError(f"report value for {k!r} spans lines")
        lines.append(f"{k}: {text}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> list[tuple[str, str]]:
    out = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if ": " not in line and not line.endswith(":"):
            raise FormatError("report lines are 'key: value'", n, 1)
        k, _, v = line.partition(":")
        out.append((k, v.removeprefix(" ")))
    return out


def gradient_field(p: Polynomial, k: int, budget: int | None = None) -> list[tuple[tuple, tuple]]:
    """Sample the projected gradient of ``p`` on the lattice of denominator k.

    Each sample is (point, direction): the gradient minus its mean within each
    block, i.e. its component tangent to the product of simplices. Numeric
    data for plotting the ascent field; no plotting is done here.
    """
    from .solvers import iter_lattice

    comp = p.compiled
    out = []
    shape = p.shape
    for count, mu in enumerate(iter_lattice(shape, k)):
        if budget is not None and count >= budget:
            break
        x = np.array([float(v) for b in mu for v in b])
        g = comp.gradient(x)
        d, pos = [], 0
        for m in shape:
            blk = g[pos:pos + m]
            d.extend((blk - blk.mean()).tolist())
            pos += m
        out.append((tuple(float(v) for v in x), tuple(d)))
    return out
