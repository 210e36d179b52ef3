from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imperfect_recall.builtins import builtin_games, figure1, figure2_restricted
from imperfect_recall.game import has_absentmindedness
from imperfect_recall.limits import BudgetExceeded
from imperfect_recall.polynomial import (
    Polynomial,
    constant_frequencies,
    eu_lipschitz_bound,
    evaluate,
    format_polynomial,
    frequency_polynomial,
    game_from_polynomial_v1,
    game_from_polynomial_v2,
    gradient,
    lipschitz_bound,
    lipschitz_bound_linf,
    utility_polynomial,
    v2_frequencies,
    v2_node_count,
)
from imperfect_recall.random_games import (
    random_float_strategy,
    random_game,
    random_polynomial,
    random_strategy,
)


def test_figure1_polynomial_text():
    p = utility_polynomial(figure1())
    assert format_polynomial(p) == "5·m11·m13·m21 + m13·m22"
    assert p.degree == 3
    assert lipschitz_bound(p) == 6


def test_lipschitz_of_square():
    x2 = Polynomial((2,), {(((0, 0), 2),): 1})
    assert lipschitz_bound(x2) == 2


def test_formatting_edge_cases():
    shape = (1,) * 10 + (2,)
    assert format_polynomial(Polynomial(shape, {})) == "0"
    p = Polynomial(shape, {(((10, 1), 2),): Fraction(-3, 2), (): 4})
    assert format_polynomial(p) == "4 - 3/2·m[11,2]^2"


def test_arithmetic_and_partials():
    shape = (2,)
    x = Polynomial.variable(shape, 0, 0)
    y = Polynomial.variable(shape, 0, 1)
    p = (x + y) ** 2 - 2 * x * y
    assert p == x**2 + y**2
    assert p.partial(0, 0) == 2 * x
    assert p.on_simplex() == Polynomial.constant(shape, 1) - 2 * x + 2 * x**2


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        Polynomial.variable((2,), 0, 0) + Polynomial.variable((3,), 0, 0)


def test_evaluate_figure2_restricted():
    p = utility_polynomial(figure2_restricted())
    mu = ((Fraction(2, 5), Fraction(0), Fraction(3, 5)),)
    assert evaluate(p, mu) == Fraction(5, 2) * Fraction(2, 5) * Fraction(3, 5) + Fraction(1, 2) * Fraction(3, 5)


@given(st.integers(0, 10**6))
def test_polynomial_matches_tree_evaluation(seed):
    from imperfect_recall.game import expected_utility

    g = random_game(seed)
    mu = random_strategy(seed, g.shape)
    assert evaluate(utility_polynomial(g), mu) == expected_utility(g, mu)


@given(st.integers(0, 10**6))
def test_compiled_matches_exact(seed):
    p = random_polynomial(seed)
    mu = random_float_strategy(seed, p.shape)
    x = np.array([v for b in mu for v in b])
    assert abs(p.compiled.value(x) - float(evaluate(p, mu))) <= 1e-9 * (1 + abs(float(evaluate(p, mu))))
    g = np.array([v for b in gradient(p, mu) for v in b], dtype=float)
    assert np.allclose(p.compiled.gradient(x), g, rtol=1e-9, atol=1e-9)


def _cube_points(rng, shape):
    return [rng.random(m) for m in shape]


@given(st.integers(0, 10**6))
def test_lipschitz_bound_is_l1_constant_on_cube(seed):
    rng = np.random.default_rng(seed)
    p = random_polynomial(seed)
    L = float(lipschitz_bound(p))
    x, y = _cube_points(rng, p.shape), _cube_points(rng, p.shape)
    dist = sum(float(np.abs(a - b).sum()) for a, b in zip(x, y))
    diff = abs(float(evaluate(p, [list(b) for b in x])) - float(evaluate(p, [list(b) for b in y])))
    assert diff <= L * dist + 1e-9


@given(st.integers(0, 10**6))
def test_lipschitz_bound_linf_is_max_norm_constant_on_cube(seed):
    rng = np.random.default_rng(seed)
    p = random_polynomial(seed)
    L = float(lipschitz_bound_linf(p))
    x, y = _cube_points(rng, p.shape), _cube_points(rng, p.shape)
    dist = max(float(np.abs(a - b).max()) for a, b in zip(x, y))
    diff = abs(float(evaluate(p, [list(b) for b in x])) - float(evaluate(p, [list(b) for b in y])))
    assert diff <= L * dist + 1e-9


def test_l1_bound_is_not_a_max_norm_constant():
    # along the diagonal the running example moves by more than 6 * max|x - y|
    p = utility_polynomial(figure1())
    half = Fraction(1, 2)
    lo = [[half] * 3, [half] * 2]
    hi = [[1, 1, 1], [1, 1]]
    assert evaluate(p, hi) - evaluate(p, lo) > lipschitz_bound(p) * half
    assert evaluate(p, hi) - evaluate(p, lo) <= lipschitz_bound_linf(p) * half


@given(st.integers(0, 10**6))
def test_v1_and_v2_round_trip(seed):
    p = random_polynomial(seed, terms=3, max_degree=3)
    assert utility_polynomial(game_from_polynomial_v1(p)) == p
    assert utility_polynomial(game_from_polynomial_v2(p)) == p


def test_round_trip_figure1_polynomial():
    p = utility_polynomial(figure1())
    for make in (game_from_polynomial_v1, game_from_polynomial_v2):
        g = make(p)
        assert utility_polynomial(g) == p
        assert g.shape == p.shape


def test_round_trip_with_constant_term():
    shape = (2,)
    p = Polynomial(shape, {(): 3, (((0, 1), 1),): -1})
    assert utility_polynomial(game_from_polynomial_v1(p)) == p


@given(st.integers(0, 10**6))
def test_v2_frequencies_are_constant_and_match_closed_form(seed):
    p = random_polynomial(seed, terms=3, max_degree=3)
    if p.is_zero():
        return
    g = game_from_polynomial_v2(p)
    freqs = constant_frequencies(g)
    assert freqs == v2_frequencies(p)
    assert v2_node_count(p) == g.num_nodes


def test_v2_respects_node_cap():
    p = Polynomial((3, 3), {(((0, 0), 3), ((1, 0), 3)): 1})
    with pytest.raises(BudgetExceeded):
        game_from_polynomial_v2(p, node_cap=50)


def test_frequency_polynomials_of_builtins():
    games = builtin_games()
    assert constant_frequencies(games["sleeping_beauty"]) == {"I": (Fraction(3, 2), 1)}
    fr = frequency_polynomial(games["figure1"], 0)
    # h0 is always visited, h1 after L
    assert fr.on_simplex() == Polynomial.constant(fr.shape, 1) + Polynomial.variable(fr.shape, 0, 0)
    assert constant_frequencies(games["figure1"]) is None


def test_eu_lipschitz_bound_dominates_observed_slope():
    g = figure2_restricted()
    L = eu_lipschitz_bound(g, 1)
    assert L == Fraction(71, 2)
    with pytest.raises(ValueError):
        eu_lipschitz_bound(g, 0)


@given(st.integers(0, 10**6))
def test_eu_lipschitz_bound_holds_for_cdt_values(seed):
    from imperfect_recall.beliefs import cdt_action_values
    from imperfect_recall.equilibrium import frequency_lower_bound

    g = random_game(seed)
    bound = frequency_lower_bound(g)
    if bound is None or not has_absentmindedness(g) and len(g.info_sets) == 0:
        return
    L = float(eu_lipschitz_bound(g, bound.lam))
    a = random_float_strategy(seed, g.shape)
    b = random_float_strategy(seed + 1, g.shape)
    dist = max(abs(x - y) for u, v in zip(a, b) for x, y in zip(u, v))
    for i in range(len(g.info_sets)):
        if bound.minima.get(g.info_sets[i].label, 1) == 0:
            continue
        va, vb = cdt_action_values(g, a, i), cdt_action_values(g, b, i)
        for x, y in zip(va, vb):
            assert abs(x - y) <= L * dist + 1e-9
