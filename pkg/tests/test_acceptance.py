"""Acceptance criteria 1-10; conftest prints one PASS/FAIL line per criterion."""

import itertools
import time
from fractions import Fraction
from math import comb, sqrt
from pathlib import Path

import numpy as np
import pytest

from imperfect_recall.beliefs import (
    derivative_identity,
    eu_cdt_gt,
    eu_edt_gdh,
    gdh_beliefs,
    gt_beliefs,
    pure,
)
from imperfect_recall.builtins import (
    absentminded_driver,
    builtin_games,
    figure1,
    figure2_restricted,
    irrational,
    sleeping_beauty,
)
from imperfect_recall.equilibrium import (
    frequency_lower_bound,
    kkt_certificate,
    matched_cdt_tolerance,
    verify_cdt_approx,
    verify_cdt_well_supported,
    verify_edt,
    well_supported_from_approx,
)
from imperfect_recall.formats import parse_polynomial
from imperfect_recall.game import (
    apply_edt_deviation,
    expected_utility,
    has_absentmindedness,
    info_set_stats,
    strategy_from_labels,
)
from imperfect_recall.polynomial import (
    eu_lipschitz_bound,
    evaluate,
    gradient,
    lipschitz_bound_linf,
    utility_polynomial,
)
from imperfect_recall.random_games import (
    random_cnf,
    random_family,
    random_float_strategy,
    random_game,
    random_polytensor,
    random_strategy,
)
from imperfect_recall.reductions import (
    common_payoff_to_game,
    kkt_cube_to_game,
    polytensor_to_game,
    polytensor_to_single_infoset_game,
    recover,
    sat3_to_game,
)
from imperfect_recall.simplex import product_lattice_size
from imperfect_recall.solvers import (
    SolverConfig,
    brute_force_grid,
    iter_lattice,
    projected_gradient_kkt,
    solve_exante,
)

README = Path(__file__).resolve().parents[1] / "README.md"


def _grid_k(shape, cap=24, points=20000):
    k = 1
    while k < cap and product_lattice_size(shape, k + 1) <= points:
        k += 1
    return k


# --- 1 ---------------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_figure1_reproduction():
    start = time.perf_counter()
    g = figure1()
    p = utility_polynomial(g)
    assert p.terms == {
        (((0, 0), 1), ((0, 2), 1), ((1, 0), 1)): 5,
        (((0, 2), 1), ((1, 1), 1)): 1,
    }
    sol = solve_exante(g)
    assert abs(sol.value - 1.25) <= 1e-6

    c_x = strategy_from_labels(g, {"I1": "C", "I2": "X"})
    assert verify_cdt_approx(g, c_x, 0).verdict
    edt = verify_edt(g, c_x, 0)
    assert not edt.verdict and edt.max_gap >= Fraction(5, 4) - Fraction(1, 10**6)

    r_y = strategy_from_labels(g, {"I1": "R", "I2": "Y"})
    assert verify_edt(g, r_y, Fraction(1, 10**9)).verdict
    assert expected_utility(g, r_y) == 1
    assert time.perf_counter() - start < 1.0


# --- 2 ---------------------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_absentminded_driver():
    start = time.perf_counter()
    g = absentminded_driver()
    sol = solve_exante(g)
    cont = g.info_sets[0].actions.index("Continue")
    assert abs(sol.strategy[0][cont] - 0.5) <= 1e-6
    assert abs(sol.value - 0.25) <= 1e-9
    for a in g.info_sets[0].actions:
        assert expected_utility(g, strategy_from_labels(g, {"I": a})) == 0
    # independent oracle: U(c) = c(1-c) is maximized at c = 1/2
    c = Fraction(1, 2)
    assert expected_utility(g, ((c, 1 - c),)) == c * (1 - c) == Fraction(1, 4)
    assert time.perf_counter() - start < 1.0


# --- 3 ---------------------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_sleeping_beauty_beliefs():
    g = sleeping_beauty()
    mu = ((Fraction(1),),)
    gt = gt_beliefs(g, mu, "I")
    assert gt.node_beliefs[g.node_id("h1")] == Fraction(1, 3)
    gdh = gdh_beliefs(g, mu, "I")
    assert gdh.history_beliefs[g.node_id("z_heads")] == Fraction(1, 2)
    assert all(isinstance(v, Fraction) for v in gdh.history_beliefs.values())


# --- 4 ---------------------------------------------------------------------------------


def _irrational_oracle() -> float:
    # p(x) = -16/3 x^6 + x^2 + x; p'(x) = -32 x^5 + 2x + 1; the optimum is p's real critical point in [0, 1]
    roots = np.roots([-32, 0, 0, 0, 2, 1])
    real = [r.real for r in roots if abs(r.imag) < 1e-12 and 0 <= r.real <= 1]
    return max(real, key=lambda x: -16 / 3 * x**6 + x**2 + x)


@pytest.mark.criterion(4)
def test_irrational_game():
    start = time.perf_counter()
    g = irrational()
    res = projected_gradient_kkt(g)
    x = res.strategy[0][0]
    assert abs(x - 0.58365) <= 1e-3
    assert res.kkt_residual <= 1e-8
    assert abs(x - _irrational_oracle()) <= 1e-6

    grid = brute_force_grid(g, 200)
    gx = float(grid.strategy[0][0])
    assert abs(gx - x) <= 1 / 200
    assert float(grid.value) <= res.value + 1e-12
    assert float(grid.value) >= res.value - float(lipschitz_bound_linf(utility_polynomial(g))) / 200
    assert time.perf_counter() - start < 5.0


# --- 5 ---------------------------------------------------------------------------------


def _restricted_oracle() -> tuple:
    # U = 5/2 L R + 1/2 R; on the C = 0 edge f(x) = 5/2 x (1-x) + 1/2 (1-x), f'(x) = 2 - 5x
    x = Fraction(2, 5)
    f = lambda t: Fraction(5, 2) * t * (1 - t) + Fraction(1, 2) * (1 - t)
    assert f(x) >= max(f(Fraction(k, 1000)) for k in range(1001))
    return (x, Fraction(0), 1 - x)


@pytest.mark.criterion(5)
def test_restricted_game_kkt_point():
    g = figure2_restricted()
    oracle = _restricted_oracle()
    rng = np.random.default_rng(5)
    starts = [None, ((1.0, 0.0, 0.0),), ((0.0, 0.0, 1.0),), ((0.0, 1.0, 0.0),)]
    starts += [(tuple(rng.dirichlet(np.ones(3))),) for _ in range(12)]
    found = set()
    for s in starts:
        res = projected_gradient_kkt(g, SolverConfig(), start=s)
        # the all-C vertex has zero gradient in every direction it can move, so it is also stationary
        if res.strategy[0][1] > 0.5:
            assert expected_utility(g, ((0, 1, 0),)) == 0
            continue
        found.add(tuple(round(v, 6) for v in res.strategy[0]))
        assert max(abs(a - float(b)) for a, b in zip(res.strategy[0], oracle)) <= 1e-6
    assert len(found) == 1
    cert = kkt_certificate(g, (oracle,))
    assert cert.valid and cert.residual == 0
    # the mirrored point 0.6 L + 0.4 R is not stationary
    mirrored = ((Fraction(3, 5), Fraction(0), Fraction(2, 5)),)
    assert kkt_certificate(g, mirrored).residual > 0


# --- 6 ---------------------------------------------------------------------------------


def _random_pairs(n, seed0=0, **kw):
    for s in range(seed0, seed0 + n):
        g = random_game(s, **kw)
        yield g, random_strategy(10_000 + s, g.shape)


@pytest.mark.criterion(6)
def test_derivative_identity_builtins_and_random():
    count = 0
    for name, g in builtin_games().items():
        for mu in (random_strategy(1, g.shape, interior=True), random_strategy(2, g.shape)):
            for i, s in enumerate(g.info_sets):
                for j in range(s.size):
                    lhs, rhs = derivative_identity(g, mu, i, j)
                    assert lhs == rhs, (name, i, j)
    for g, mu in _random_pairs(120):
        for i, s in enumerate(g.info_sets):
            for j in range(s.size):
                lhs, rhs = derivative_identity(g, mu, i, j)
                assert lhs == rhs
        count += 1
    assert count >= 100


@pytest.mark.criterion(6)
def test_gradient_matches_finite_differences():
    h = 1e-6
    for g, _ in _random_pairs(60, seed0=500):
        p = utility_polynomial(g)
        mu = random_float_strategy(g.num_nodes, g.shape)
        grad = gradient(p, mu)
        for i, block in enumerate(mu):
            for j in range(len(block)):
                up = [list(b) for b in mu]
                dn = [list(b) for b in mu]
                up[i][j] += h
                dn[i][j] -= h
                fd = (evaluate(p, up) - evaluate(p, dn)) / (2 * h)
                assert abs(fd - grad[i][j]) <= 1e-6 * max(1.0, abs(grad[i][j]))


@pytest.mark.criterion(6)
def test_belief_normalization_exact():
    for g, mu in _random_pairs(60, seed0=900):
        for i in range(len(g.info_sets)):
            st = info_set_stats(g, mu, i)
            if st.visit_freq > 0:
                gt = gt_beliefs(g, mu, i)
                assert sum(gt.node_beliefs.values()) == 1
                assert sum(gt.history_beliefs.values()) == 1
                assert sum(gt.joint_beliefs.values()) == 1
            if st.reach_prob > 0:
                gdh = gdh_beliefs(g, mu, i)
                assert sum(gdh.node_beliefs.values()) == 1
                assert sum(gdh.history_beliefs.values()) == 1
                assert sum(gdh.joint_beliefs.values()) == 1


@pytest.mark.criterion(6)
def test_edt_deviation_keeps_reach_probability():
    for g, mu in _random_pairs(60, seed0=1300):
        for i, s in enumerate(g.info_sets):
            alpha = random_strategy(i + 7, (s.size,))[0]
            deviated = apply_edt_deviation(mu, i, alpha)
            assert info_set_stats(g, deviated, i).reach_prob == info_set_stats(g, mu, i).reach_prob


@pytest.mark.criterion(6)
def test_no_absentmindedness_cdt_equals_edt():
    games = 0
    seed = 0
    while games < 50:
        g = random_game(seed, absentminded=False)
        seed += 1
        assert not has_absentmindedness(g)
        mu = random_strategy(seed, g.shape)
        for i, s in enumerate(g.info_sets):
            if info_set_stats(g, mu, i).reach_prob == 0:
                continue
            for alpha in [pure(g, i, j) for j in range(s.size)] + [random_strategy(seed + 99, (s.size,))[0]]:
                assert eu_cdt_gt(g, mu, i, alpha) == eu_edt_gdh(g, mu, i, alpha)
        games += 1


# --- 7 ---------------------------------------------------------------------------------


def _hierarchy_games():
    yield from builtin_games().items()
    for s in range(50):
        yield f"random{s}", random_game(3000 + s, max_nodes=12)


@pytest.mark.criterion(7)
def test_grid_optima_pass_edt_and_edt_passes_cdt():
    cfg = SolverConfig()
    for name, g in _hierarchy_games():
        assert g.num_nodes <= 12 or not name.startswith("random")
        p = utility_polynomial(g)
        k = _grid_k(p.shape)
        grid = brute_force_grid(p, k)
        tol = float(lipschitz_bound_linf(p)) / k
        edt = verify_edt(g, grid.strategy, tol, cfg)
        assert edt.verdict, (name, edt.max_gap, tol)
        matched = matched_cdt_tolerance(g, grid.strategy, float(edt.max_gap) + edt.certificate_gap)
        assert verify_cdt_approx(g, grid.strategy, max(matched, 1e-12)).verdict, name


@pytest.mark.criterion(7)
def test_edt_pure_strategies_pass_cdt():
    cfg = SolverConfig()
    checked = 0
    for name, g in _hierarchy_games():
        for mu in iter_lattice(g.shape, 1):
            edt = verify_edt(g, mu, 0, cfg)
            if edt.verdict and edt.certificate_gap == 0:
                assert verify_cdt_approx(g, mu, 0).verdict, name
                checked += 1
    assert checked > 0


@pytest.mark.criterion(7)
def test_cdt_pass_edt_fail_exists():
    g = figure1()
    c_x = strategy_from_labels(g, {"I1": "C", "I2": "X"})
    assert verify_cdt_approx(g, c_x, 0).verdict and not verify_edt(g, c_x, 0).verdict
    witnesses = 0
    for s in range(50):
        g = random_game(3000 + s, max_nodes=12)
        for mu in iter_lattice(g.shape, 1):
            if verify_cdt_approx(g, mu, 0).verdict:
                edt = verify_edt(g, mu, 0)
                if float(edt.max_gap) > edt.certificate_gap:
                    witnesses += 1
    assert witnesses >= 1


# --- 8 ---------------------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_well_supported_conversion():
    eps = 1e-8
    done = 0
    seed = 0
    while done < 20:
        g = random_game(seed)
        seed += 1
        bound = frequency_lower_bound(g)
        if bound is None:
            continue
        lip = eu_lipschitz_bound(g, bound.lam)
        res = projected_gradient_kkt(g, SolverConfig(tol=1e-12))
        # a solver output, and the same point pulled slightly toward uniform
        uniform = [np.full(m, 1.0 / m) for m in g.shape]
        nudged = tuple(tuple(float(v) for v in (1 - 1e-10) * np.array(b) + 1e-10 * u)
                       for b, u in zip(res.strategy, uniform))
        for mu in (res.strategy, nudged):
            if not verify_cdt_approx(g, mu, eps).verdict:
                continue
            pi = well_supported_from_approx(g, mu, eps, bound.lam, lip)
            target = 3 * float(lip) * g.num_nodes * sqrt(eps)
            assert verify_cdt_well_supported(g, pi, target).verdict
            move = max(abs(a - b) for x, y in zip(pi, mu) for a, b in zip(x, y))
            assert move <= sqrt(eps) * g.num_nodes
        done += 1
    assert done == 20


# --- 9 ---------------------------------------------------------------------------------


def _sat_oracle(num_vars, clauses) -> bool:
    for bits in itertools.product((False, True), repeat=num_vars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


@pytest.mark.criterion(9)
def test_sat_equivalence():
    sat_count = 0
    for s in range(50):
        cnf = random_cnf(s, num_vars=int(1 + s % 4))
        out = sat3_to_game(cnf)
        grid = brute_force_grid(out.game, 1)
        satisfiable = _sat_oracle(cnf.num_vars, cnf.clauses)
        assert (grid.value == 1) == satisfiable
        if satisfiable:
            sat_count += 1
            assert recover(out, grid.strategy).valid
    assert 0 < sat_count < 50


def _family_oracle(fam, mu1, mu2):
    total = Fraction(0)
    for s, ps in zip(fam.states, fam.probs):
        a_dist = dict(zip(fam.p1_actions[fam.p1_class[s]], mu1[fam.p1_class[s]]))
        b_dist = dict(zip(fam.p2_actions[fam.p2_class[s]], mu2[fam.p2_class[s]]))
        for a, pa in a_dist.items():
            for b, pb in b_dist.items():
                total += ps * pa * pb * fam.payoff.get((s, a, b), 0)
    return total


@pytest.mark.criterion(9)
def test_common_payoff_grid_values():
    for s in range(10):
        fam = random_family(s)
        out = common_payoff_to_game(fam)
        p = utility_polynomial(out.game)
        n1 = len(fam.p1_classes)
        best_game, best_family = None, None
        for mu in iter_lattice(out.game.shape, 3):
            mu1 = dict(zip(fam.p1_classes, mu[:n1]))
            mu2 = dict(zip(fam.p2_classes, mu[n1:]))
            v_game = evaluate(p, mu)
            v_fam = _family_oracle(fam, mu1, mu2)
            assert v_game == v_fam
            best_game = v_game if best_game is None else max(best_game, v_game)
            best_family = v_fam if best_family is None else max(best_family, v_fam)
        assert best_game == best_family == brute_force_grid(out.game, 3).value


@pytest.mark.criterion(9)
def test_kkt_cube_recovery():
    p = parse_polynomial("shape 1\nm11 - m11^2")
    eps = Fraction(1, 1000)
    out = kkt_cube_to_game(p, eps)
    for start in (None, ((0.9, 0.1),), ((0.05, 0.95),)):
        res = projected_gradient_kkt(out.game, SolverConfig(tol=1e-14), start=start)
        assert verify_cdt_approx(out.game, res.strategy, float(out.precision_out)).verdict
        rec = recover(out, res.strategy)
        assert rec.valid
        x = rec.solution[0]
        # oracle: p'(x) = 1 - 2x; an eps-KKT point of the cube needs |1 - 2x| <= eps in the interior
        assert abs(1 - 2 * x) <= float(eps)


def _nash_oracle(pt, x):
    def value(profile, i):
        total = 0.0
        for subset in itertools.combinations(range(pt.n), pt.c):
            if i not in subset:
                continue
            table = pt.tables[subset]
            for acts in itertools.product(range(pt.m), repeat=pt.c):
                w = 1.0
                for player, a in zip(subset, acts):
                    w *= profile[player][a]
                total += w * float(table[acts])
        return total

    gaps = []
    for i in range(pt.n):
        base = value(x, i)
        best = max(value([x[k] if k != i else [float(j == a) for j in range(pt.m)] for k in range(pt.n)], i)
                   for a in range(pt.m))
        gaps.append(best - base)
    return max(gaps)


@pytest.mark.criterion(9)
def test_polytensor_recovery():
    eps = Fraction(1, 1000)
    for s in range(3):
        pt = random_polytensor(s, n=5, m=2)
        out = polytensor_to_game(pt, eps)
        assert out.precision_out == eps / comb(4, 4)
        for start_seed in range(3):
            start = random_float_strategy(100 + start_seed, out.game.shape)
            res = projected_gradient_kkt(out.game, SolverConfig(tol=1e-12), start=start)
            assert verify_cdt_approx(out.game, res.strategy, float(out.precision_out)).verdict
            rec = recover(out, res.strategy)
            assert rec.valid
            assert _nash_oracle(pt, rec.solution) <= float(eps)


@pytest.mark.criterion(9)
def test_single_infoset_parameters():
    n, m = 5, 1
    eps = Fraction(1, 2)
    pt = random_polytensor(0, n=n, m=m)
    out = polytensor_to_single_infoset_game(pt, eps)
    lip = out.params["L"]
    assert lip == eu_lipschitz_bound(out.game, 5)
    m1 = Fraction(2 * 100 * n**9 * m**4) / eps
    delta1 = Fraction(1, 5) * (Fraction(1, n) - 1 / m1) ** 4 * eps / 2
    delta2 = (delta1 / (3 * lip * sum((n * m) ** k for k in range(6)))) ** 2
    m2 = (delta1 + n**4) * m1**4
    assert out.params["M1"] == m1
    assert out.params["delta1"] == delta1
    assert out.params["delta2"] == delta2 == out.precision_out
    assert out.params["M2"] == m2
    assert all(isinstance(out.params[k], Fraction) for k in ("M1", "delta1", "delta2", "M2"))
    # the single info set is visited five times under any strategy
    mu = random_strategy(3, out.game.shape, interior=True)
    assert info_set_stats(out.game, mu, 0).visit_freq == 5
    assert out.game.num_nodes == sum((n * m) ** k for k in range(6))


# --- 10 --------------------------------------------------------------------------------


@pytest.mark.criterion(10)
def test_hardness_results_are_scoped():
    text = README.read_text(encoding="utf-8")
    assert "are not reproduced as experiments" in text
    assert "NP-hardness" in text and "CLS-hardness" in text and "inapproximability" in text
