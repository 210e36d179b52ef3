from fractions import Fraction
from math import sqrt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imperfect_recall.builtins import (
    absentminded_driver,
    figure1,
    figure2_restricted,
    sleeping_beauty,
    trivial,
)
from imperfect_recall.equilibrium import (
    frequency_lower_bound,
    hierarchy_check,
    kkt_certificate,
    matched_cdt_tolerance,
    verify_cdt_approx,
    verify_cdt_well_supported,
    verify_edt,
    well_supported_from_approx,
    well_supported_guarantee,
)
from imperfect_recall.game import strategy_from_labels
from imperfect_recall.polynomial import eu_lipschitz_bound
from imperfect_recall.random_games import random_game, random_strategy
from imperfect_recall.solvers import SolverConfig, projected_gradient_kkt, solve_exante

HALF = Fraction(1, 2)


@pytest.fixture
def g():
    return figure1()


def test_cdt_verdicts(g):
    assert verify_cdt_approx(g, strategy_from_labels(g, {"I1": "C", "I2": "X"}), 0).verdict
    l_x = verify_cdt_approx(g, strategy_from_labels(g, {"I1": "L", "I2": "X"}), 0)
    assert not l_x.verdict and l_x.max_gap == Fraction(5, 2)
    # I2 is never reached under L, so only I1 is checked
    assert set(l_x.gaps) == {"I1"}


def test_well_supported_verdict(g):
    mu = strategy_from_labels(g, {"I1": {"L": Fraction(1, 10), "C": Fraction(9, 10)}, "I2": "X"})
    rep = verify_cdt_well_supported(g, mu, 0)
    assert not rep.verdict and rep.max_gap == Fraction(5, 11)


def test_edt_verdicts(g):
    assert not verify_edt(g, strategy_from_labels(g, {"I1": "C", "I2": "X"}), 0).verdict
    assert verify_edt(g, strategy_from_labels(g, {"I1": "R", "I2": "Y"}), 0).verdict
    assert verify_edt(g, strategy_from_labels(g, {"I1": {"L": HALF, "R": HALF}, "I2": "X"}), 0).verdict


def test_kkt_certificates():
    g = figure1()
    cert = kkt_certificate(g, strategy_from_labels(g, {"I1": "C", "I2": "X"}))
    assert cert.valid and cert.residual == 0 and cert.cs_violation == 0
    g2 = figure2_restricted()
    cert2 = kkt_certificate(g2, ((0.4, 0.0, 0.6),))
    assert cert2.residual <= 1e-12
    assert cert2.kappa[0] == pytest.approx(1.5)
    bad = kkt_certificate(g2, ((HALF, 0, HALF),))
    assert not bad.valid and bad.residual == Fraction(1, 2)


def test_kkt_certificate_support_tolerance():
    g2 = figure2_restricted()
    cert = kkt_certificate(g2, ((0.4, 1e-14, 0.6 - 1e-14),), eps=1e-9, support_tol=1e-12)
    assert cert.valid
    assert cert.tau[0][1] == pytest.approx(1.5)


def test_frequency_bounds():
    assert frequency_lower_bound(figure1()) is None  # Fr(I2) can be arbitrarily small
    ad = frequency_lower_bound(absentminded_driver())
    assert ad.lam == 1 and not ad.strategy_independent
    sb = frequency_lower_bound(sleeping_beauty())
    assert sb.lam == Fraction(3, 2) and sb.strategy_independent


def test_well_supported_conversion_example():
    g = absentminded_driver()
    eps = 1e-4
    mu = ((0.5 + 1e-3, 0.5 - 1e-3),)
    pi = well_supported_from_approx(g, mu, eps, 1, eu_lipschitz_bound(g, 1))
    assert pi == mu  # nothing at or below sqrt(eps)
    mu = ((1 - 5e-3, 5e-3),)
    pi = well_supported_from_approx(g, mu, eps, 1, 3)
    assert pi == ((1.0, 0.0),)
    with pytest.raises(ValueError):
        well_supported_from_approx(g, mu, 0.3, 1, 3)  # sqrt(eps) >= 1/2
    with pytest.raises(ValueError):
        well_supported_from_approx(g, mu, eps, 0, 3)
    assert well_supported_guarantee(g, eps, 3) == pytest.approx(3 * 3 * g.num_nodes * sqrt(eps))


def test_matched_tolerance_is_zero_at_zero_gap(g):
    mu = strategy_from_labels(g, {"I1": "R", "I2": "Y"})
    assert matched_cdt_tolerance(g, mu, 0.0) == 0.0


def test_hierarchy_on_running_example(g):
    ex = solve_exante(g).strategy
    report = hierarchy_check(
        g,
        ex,
        strategy_from_labels(g, {"I1": "R", "I2": "Y"}),
        strategy_from_labels(g, {"I1": "C", "I2": "X"}),
        tol=1e-6,
    )
    rows = {r.name: r for r in report.rows}
    assert rows["exante"].exante and rows["exante"].edt and rows["exante"].cdt_matched
    assert not rows["edt"].exante and rows["edt"].edt and rows["edt"].cdt
    assert rows["cdt"].cdt and not rows["cdt"].edt
    assert report.consistent


def test_hierarchy_trivial_game():
    t = trivial()
    report = hierarchy_check(t, (), (), ())
    assert report.consistent and all(r.exante and r.edt and r.cdt for r in report.rows)


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_cdt_gap_bounded_by_kkt_residual(seed):
    game = random_game(seed)
    res = projected_gradient_kkt(game, SolverConfig(tol=1e-12))
    rep = verify_cdt_approx(game, res.strategy, 1.0)
    from imperfect_recall.game import info_set_stats

    for label, gap in rep.gaps.items():
        fr = info_set_stats(game, res.strategy, label).visit_freq
        assert gap <= res.kkt_residual / fr + 1e-9


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_well_supported_implies_approx(seed):
    game = random_game(seed)
    mu = random_strategy(seed, game.shape)
    ws = verify_cdt_well_supported(game, mu, 0)
    approx = verify_cdt_approx(game, mu, 0)
    assert approx.max_gap <= ws.max_gap
