from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imperfect_recall.formats import game_hash, serialize_game
from imperfect_recall.game import (
    depth,
    info_set_stats,
    pure_strategy,
    uniform_strategy,
    validate_game,
)
from imperfect_recall.polynomial import Polynomial, evaluate, utility_polynomial
from imperfect_recall.random_games import (
    random_cnf,
    random_family,
    random_polytensor,
    random_strategy,
)
from imperfect_recall.reductions import (
    Cnf3,
    CommonPayoffFamily,
    common_payoff_to_game,
    cube_kkt_violation,
    kkt_cube_to_game,
    normalize_single_infoset,
    pad_clauses,
    polytensor_to_game,
    rebuild,
    recover,
    sat3_to_game,
    single_infoset_params,
    split_profile,
)


def test_cnf_validation():
    with pytest.raises(ValueError):
        Cnf3(2, ((1, 3),))
    with pytest.raises(ValueError):
        Cnf3(2, ((),))
    with pytest.raises(ValueError):
        pad_clauses(Cnf3(4, ((1, 2, 3, 4),)))


def test_padding_shapes():
    padded, notes = pad_clauses(Cnf3(3, ((1,), (2, -3), (1, -1, 2))))
    assert all(len({abs(l) for l in c}) == 3 for c in padded.clauses)
    # (x1) -> 4 clauses, (x2 v -x3) -> 2, tautology -> 1
    assert len(padded.clauses) == 7
    assert len(notes) == 3


@settings(max_examples=40)
@given(st.integers(0, 10**6))
def test_padding_preserves_satisfiability(seed):
    cnf = random_cnf(seed, num_vars=3)
    padded, _ = pad_clauses(cnf)
    assert padded.satisfiable() == cnf.satisfiable()


def test_sat_game_structure():
    out = sat3_to_game(Cnf3(3, ((1, 2, 3), (-1, -2, -3))))
    g = out.game
    assert validate_game(g).ok
    assert depth(g) == 4  # chance plus three decisions
    assert out.params["target"] == 1
    value_tt = evaluate(utility_polynomial(g), pure_strategy(g, ["T", "F", "F"]))
    assert value_tt == 1
    assert evaluate(utility_polynomial(g), pure_strategy(g, ["T", "T", "T"])) == Fraction(1, 2)


def test_sat_recovery_rejects_malformed():
    out = sat3_to_game(Cnf3(1, ((1,),)))
    with pytest.raises(ValueError):
        recover(out, ((1, 0),))


def test_common_payoff_matches_family_value():
    fam = CommonPayoffFamily(
        states=("s", "t"),
        probs=(Fraction(1, 3), Fraction(2, 3)),
        p1_class={"s": "A", "t": "A"},
        p2_class={"s": "B", "t": "C"},
        p1_actions={"A": ("u", "d")},
        p2_actions={"B": ("l", "r"), "C": ("l", "r")},
        payoff={("s", "u", "l"): Fraction(3), ("t", "d", "r"): Fraction(6)},
    )
    out = common_payoff_to_game(fam)
    assert depth(out.game) == 3
    mu = uniform_strategy(out.game)
    mu1, mu2 = split_profile(fam, mu)
    # 1/3 * 1/4 * 3 + 2/3 * 1/4 * 6
    assert fam.value(mu1, mu2) == Fraction(5, 4)
    assert evaluate(utility_polynomial(out.game), mu) == Fraction(5, 4)


def test_family_validation():
    with pytest.raises(ValueError):
        CommonPayoffFamily(("s",), (Fraction(1, 2),), {"s": "A"}, {"s": "B"}, {"A": ("a",)}, {"B": ("b",)})


@settings(max_examples=20)
@given(st.integers(0, 10**6))
def test_common_payoff_value_identity(seed):
    fam = random_family(seed)
    out = common_payoff_to_game(fam)
    mu = random_strategy(seed, out.game.shape)
    assert evaluate(utility_polynomial(out.game), mu) == fam.value(*split_profile(fam, mu))


def test_cube_violation():
    p = Polynomial((1,), {(((0, 0), 1),): 1})  # p(x) = x, maximized at x = 1
    assert cube_kkt_violation(p, (1.0,)) == 0
    assert cube_kkt_violation(p, (0.5,)) == 1


def test_kkt_cube_parameters():
    p = Polynomial((1, 1), {(((0, 0), 1), ((1, 0), 1)): 1})
    out = kkt_cube_to_game(p, Fraction(1, 10))
    lam, lip, n = out.params["lambda"], out.params["L"], out.params["N"]
    assert out.precision_out == min(Fraction(1, 3), Fraction(1, 100) / (3 * lip * n**2) ** 2)
    assert lam > 0
    with pytest.raises(ValueError):
        kkt_cube_to_game(p, 0)


def test_polytensor_reach_is_constant():
    pt = random_polytensor(1, n=6, m=2)
    out = polytensor_to_game(pt, Fraction(1, 10))
    assert out.precision_out == Fraction(1, 10) / comb(5, 4)
    for seed in range(3):
        mu = random_strategy(seed, out.game.shape)
        for i in range(6):
            assert info_set_stats(out.game, mu, i).reach_prob == Fraction(5, 6)


def test_single_infoset_params_formula():
    n, m, eps, lip = 5, 2, Fraction(1, 10), Fraction(7)
    prm = single_infoset_params(n, m, eps, lip)
    m1 = Fraction(200 * n**9 * m**4) / eps
    assert prm["M1"] == m1
    d1 = Fraction(1, 5) * (Fraction(1, n) - 1 / m1) ** 4 * eps / 2
    assert prm["delta1"] == d1
    assert prm["H"] == sum(10**k for k in range(6))
    assert prm["delta2"] == (d1 / (3 * lip * prm["H"])) ** 2
    assert prm["M2"] == (d1 + n**4) * m1**4


def test_normalize_single_infoset():
    mu = ((Fraction(1, 4), Fraction(1, 4), Fraction(1, 2), Fraction(0)),)
    x, empty = normalize_single_infoset(mu, 2, 2)
    assert x == ((Fraction(1, 2), Fraction(1, 2)), (Fraction(1), Fraction(0)))
    assert empty == []
    _, empty = normalize_single_infoset(((Fraction(1), 0, 0, 0),), 2, 2)
    assert empty == [1]


def test_rebuild_is_deterministic_and_carries_provenance():
    cnf = Cnf3(2, ((1, -2),))
    a = rebuild("sat", cnf)
    b = rebuild("sat", cnf)
    assert serialize_game(a.game) == serialize_game(b.game)
    assert game_hash(a.game) == game_hash(b.game)
    meta = dict(a.game.meta)
    assert meta["reduction"] == "sat"
    with pytest.raises(ValueError):
        rebuild("nope", cnf)
