"""Belief systems and decision-theoretic expected utilities at an info set.

GT (generalized thirding) weights the nodes of an info set by how often they
are visited; GDH (generalized double halving) weights terminal histories by how
likely they are given that the info set is reached at all, then splits each
history evenly over the info set's nodes on it.

CDT evaluates a deviation at the current node only; EDT lets the whole info set
switch to the deviation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .game import (
    GameTree,
    InvalidStrategy,
    UnreachedInfoSet,
    apply_edt_deviation,
    check_strategy,
    first_entry_nodes,
    is_exact_strategy,
    node_values,
    reach_probabilities,
)
from .polynomial import evaluate, utility_polynomial

GT = "gt"
GDH = "gdh"


@dataclass(frozen=True)
class BeliefTable:
    info_set: int
    system: str
    node_beliefs: dict[int, object]
    history_beliefs: dict[int, object]
    joint_beliefs: dict[tuple[int, int], object]


def _zero(mu):
    return Fraction(0) if is_exact_strategy(mu) else 0.0


def _paths_through(tree: GameTree, info_set: int) -> dict[int, list[int]]:
    """For each terminal whose history meets the info set, the info-set nodes on that history."""
    members = set(tree.info_sets[info_set].members)
    out: dict[int, list[int]] = {}
    for z in tree.terminals:
        on_path = []
        cur = tree.nodes[z].parent
        while cur is not None:
            if cur in members:
                on_path.append(cur)
            cur = tree.nodes[cur].parent
        if on_path:
            out[z] = sorted(on_path)
    return out


def _stats(tree: GameTree, mu, i: int):
    reach = reach_probabilities(tree, mu)
    zero = _zero(mu)
    fr = sum((reach[h] for h in tree.info_sets[i].members), zero)
    pr = sum((reach[h] for h in sorted(first_entry_nodes(tree, i))), zero)
    return reach, fr, pr


def gt_beliefs(tree: GameTree, mu, info_set) -> BeliefTable:
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    reach, fr, _ = _stats(tree, mu, i)
    if fr == 0:
        raise UnreachedInfoSet(f"unreached info set {tree.info_sets[i].label}: visit frequency is 0")
    nodes = {h: reach[h] / fr for h in tree.info_sets[i].members}
    paths = _paths_through(tree, i)
    below = {h: reach_probabilities(tree, mu, start=h) for h in tree.info_sets[i].members}
    history = {z: len(hs) * reach[z] / fr for z, hs in paths.items()}
    joint = {(h, z): nodes[h] * below[h][z] for z, hs in paths.items() for h in hs}
    return BeliefTable(i, GT, nodes, history, joint)


def gdh_beliefs(tree: GameTree, mu, info_set) -> BeliefTable:
    """GDH tables; node beliefs follow the uniform split of each history over its info-set nodes."""
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    reach, _, pr = _stats(tree, mu, i)
    if pr == 0:
        raise UnreachedInfoSet(f"unreached info set {tree.info_sets[i].label}: reach probability is 0")
    paths = _paths_through(tree, i)
    history = {z: reach[z] / pr for z in paths}
    joint = {(h, z): history[z] / len(hs) for z, hs in paths.items() for h in hs}
    zero = _zero(mu)
    nodes = {h: zero for h in tree.info_sets[i].members}
    for (h, _), b in joint.items():
        nodes[h] = nodes[h] + b
    return BeliefTable(i, GDH, nodes, history, joint)


def gdh_node_belief_formula(tree: GameTree, mu, info_set, node: int):
    """Node belief written as (Prob(h)/Prob(I)) * sum_z Prob(z | h) / |I ∩ hist(z)|.

    An independent route to the GDH node beliefs, used to cross-check
    :func:`gdh_beliefs`.
    """
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    reach, _, pr = _stats(tree, mu, i)
    if pr == 0:
        raise UnreachedInfoSet(f"unreached info set {tree.info_sets[i].label}")
    below = reach_probabilities(tree, mu, start=node)
    paths = _paths_through(tree, i)
    acc = _zero(mu)
    for z, hs in paths.items():
        if node in hs:
            acc = acc + below[z] / len(hs)
    return reach[node] / pr * acc


def _check_alpha(tree: GameTree, i: int, alpha, mu) -> tuple:
    alpha = tuple(alpha)
    m = tree.info_sets[i].size
    if len(alpha) != m:
        raise InvalidStrategy(f"deviation has {len(alpha)} entries, info set has {m} actions")
    probe = list(mu)
    probe[i] = alpha
    check_strategy(tree, probe)
    if not is_exact_strategy(mu) or not is_exact_strategy([alpha]):
        alpha = tuple(float(a) for a in alpha)
    return alpha


def pure(tree: GameTree, info_set, action) -> tuple:
    """The pure distribution on one action (index or label) of an info set."""
    i = tree.info_set_index(info_set)
    s = tree.info_sets[i]
    j = s.actions.index(action) if isinstance(action, str) else action
    return tuple(Fraction(int(k == j)) for k in range(s.size))


def eu_cdt_gt(tree: GameTree, mu, info_set, alpha):
    """sum_h Prob_GT(h) * sum_a alpha(a) * U(mu | h∘a) over the nodes h of the info set."""
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    alpha = _check_alpha(tree, i, alpha, mu)
    reach, fr, _ = _stats(tree, mu, i)
    if fr == 0:
        raise UnreachedInfoSet(f"unreached info set {tree.info_sets[i].label}: visit frequency is 0")
    vals = node_values(tree, mu)
    total = _zero(mu)
    for h in tree.info_sets[i].members:
        if not reach[h]:
            continue
        inner = _zero(mu)
        for a, (_, c) in zip(alpha, tree.nodes[h].children):
            inner = inner + a * vals[c]
        total = total + reach[h] * inner
    return total / fr


def cdt_action_values(tree: GameTree, mu, info_set) -> tuple:
    """EU_CDT,GT of every pure action of the info set (one tree pass)."""
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    reach, fr, _ = _stats(tree, mu, i)
    if fr == 0:
        raise UnreachedInfoSet(f"unreached info set {tree.info_sets[i].label}: visit frequency is 0")
    vals = node_values(tree, mu)
    m = tree.info_sets[i].size
    acc = [_zero(mu)] * m
    for h in tree.info_sets[i].members:
        if reach[h]:
            for j, (_, c) in enumerate(tree.nodes[h].children):
                acc[j] = acc[j] + reach[h] * vals[c]
    return tuple(a / fr for a in acc)


def eu_edt_gdh(tree: GameTree, mu, info_set, alpha):
    """(1 / Prob(I | mu)) * sum over histories meeting I of Prob(z | mu with I switched to alpha) * u(z)."""
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    alpha = _check_alpha(tree, i, alpha, mu)
    _, _, pr = _stats(tree, mu, i)
    if pr == 0:
        raise UnreachedInfoSet(f"unreached info set {tree.info_sets[i].label}: reach probability is 0")
    deviated = apply_edt_deviation(mu, i, alpha)
    reach = reach_probabilities(tree, deviated)
    total = _zero(mu)
    for z in _paths_through(tree, i):
        total = total + reach[z] * tree.nodes[z].payoff
    return total / pr


def eu_edt_gdh_from_beliefs(tree: GameTree, mu, info_set, alpha):
    """EDT utility as the GDH-weighted payoff sum under the deviated strategy."""
    i = tree.info_set_index(info_set)
    mu = check_strategy(tree, mu)
    alpha = _check_alpha(tree, i, alpha, mu)
    deviated = apply_edt_deviation(mu, i, alpha)
    table = gdh_beliefs(tree, deviated, i)
    total = _zero(mu)
    for z, b in table.history_beliefs.items():
        total = total + b * tree.nodes[z].payoff
    return total


def derivative_identity(tree: GameTree, mu, i: int, j: int) -> tuple:
    """(dU/dmu_ij at mu, Fr(I_i | mu) * EU_CDT,GT(a_j | mu, I_i)), the latter 0 when Fr = 0."""
    mu = check_strategy(tree, mu)
    if not 0 <= i < len(tree.info_sets) or not 0 <= j < tree.info_sets[i].size:
        raise IndexError(f"no action {(i, j)}")
    lhs = evaluate(utility_polynomial(tree).partial(i, j), mu)
    _, fr, _ = _stats(tree, mu, i)
    if fr == 0:
        return lhs, _zero(mu)
    return lhs, fr * eu_cdt_gt(tree, mu, i, pure(tree, i, j))
