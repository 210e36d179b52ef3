"""Checking and certifying equilibria.

CDT equilibria compare the info set's current mix with its best pure action
under GT beliefs; they coincide with KKT points of the ex-ante utility. EDT
equilibria ask every info set to be a global maximizer of U in its own block,
which needs a block-wise polynomial maximization (delegated to
:func:`imperfect_recall.solvers.block_best_response`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import sqrt

import numpy as np

from .beliefs import cdt_action_values
from .game import (
    GameTree,
    check_strategy,
    first_entry_nodes,
    is_exact_strategy,
    reach_probabilities,
)
from .limits import default_node_budget
from .polynomial import (
    Polynomial,
    constant_frequencies,
    evaluate,
    frequency_polynomial,
    lipschitz_bound_linf,
    utility_polynomial,
)
from .simplex import compositions, product_lattice_size
from .solvers import SolverConfig, block_best_response, brute_force_grid, solve_exante

CDT_APPROX = "cdt_approx"
CDT_WELL_SUPPORTED = "cdt_well_supported"
EDT = "edt"


@dataclass(frozen=True)
class EquilibriumReport:
    kind: str
    gaps: dict  # info set label -> gap, for the info sets the definition quantifies over
    max_gap: object
    epsilon: object
    verdict: bool
    certificate_gap: float = 0.0  # EDT only: how much the block solver may have missed
    note: str = ""


@dataclass(frozen=True)
class KktCertificate:
    strategy: tuple
    tau: tuple
    kappa: tuple
    residual: object
    cs_violation: object
    epsilon: object
    valid: bool


@dataclass(frozen=True)
class FrequencyBound:
    lam: object
    strategy_independent: bool
    minima: dict = field(default_factory=dict)  # info set label -> certified lower bound (0: never visited)


def _visit_data(tree: GameTree, mu):
    reach = reach_probabilities(tree, mu)
    zero = Fraction(0) if is_exact_strategy(mu) else 0.0
    fr = [sum((reach[h] for h in s.members), zero) for s in tree.info_sets]
    pr = [sum((reach[h] for h in sorted(first_entry_nodes(tree, i))), zero) for i, s in enumerate(tree.info_sets)]
    return fr, pr


def _report(kind, gaps, eps, **extra) -> EquilibriumReport:
    max_gap = max(gaps.values(), default=0)
    return EquilibriumReport(kind, gaps, max_gap, eps, bool(max_gap <= eps), **extra)


def verify_cdt_approx(tree: GameTree, mu, eps) -> EquilibriumReport:
    """Gap per reached info set: best pure CDT value minus the value of the current mix."""
    mu = check_strategy(tree, mu)
    fr, _ = _visit_data(tree, mu)
    gaps = {}
    for i, s in enumerate(tree.info_sets):
        if fr[i] == 0:
            continue
        vals = cdt_action_values(tree, mu, i)
        current = sum((a * v for a, v in zip(mu[i], vals)), 0 * vals[0])
        gaps[s.label] = max(vals) - current
    return _report(CDT_APPROX, gaps, eps)


def verify_cdt_well_supported(tree: GameTree, mu, eps) -> EquilibriumReport:
    """Gap per reached info set: best pure CDT value minus the worst supported action's value."""
    mu = check_strategy(tree, mu)
    fr, _ = _visit_data(tree, mu)
    gaps = {}
    for i, s in enumerate(tree.info_sets):
        if fr[i] == 0:
            continue
        vals = cdt_action_values(tree, mu, i)
        gaps[s.label] = max(vals) - min(v for a, v in zip(mu[i], vals) if a > 0)
    return _report(CDT_WELL_SUPPORTED, gaps, eps)


def kkt_certificate(source, mu, eps=0, support_tol=0) -> KktCertificate:
    """Multipliers for the KKT system dU/dmu_ij = -tau_ij + kappa_i.

    kappa_i is the largest partial in block i. Complementary slackness is built
    in for supported actions (mu_ij > support_tol get tau_ij = 0), so the
    stationarity residual measures how far supported partials fall below
    kappa_i. Actions at or below ``support_tol`` get tau_ij = kappa_i - dU/dmu_ij
    and contribute tau_ij * mu_ij to the slackness violation.
    """
    p = source if isinstance(source, Polynomial) else utility_polynomial(source)
    mu = check_strategy(p.shape, mu)
    exact = is_exact_strategy(mu)
    zero = Fraction(0) if exact else 0.0
    taus, kappas = [], []
    residual, cs = zero, zero
    for i, m in enumerate(p.shape):
        grad = [evaluate(p.partial(i, j), mu) for j in range(m)]
        kappa = max(grad)
        tau = []
        for j, gj in enumerate(grad):
            if mu[i][j] > support_tol:
                tau.append(zero)
                residual = max(residual, abs(gj - kappa))
            else:
                t = kappa - gj
                tau.append(t)
                cs = max(cs, t * mu[i][j])
        taus.append(tuple(tau))
        kappas.append(kappa)
    valid = residual <= eps and cs <= eps
    return KktCertificate(mu, tuple(taus), tuple(kappas), residual, cs, eps, bool(valid))


def verify_edt(tree: GameTree, mu, eps, cfg: SolverConfig | None = None) -> EquilibriumReport:
    """Gap per reached info set: best block response value minus U(mu).

    Mixed deviations are searched, not just pure ones. The verdict is certified
    up to ``certificate_gap``, the largest amount by which a block solve may
    have missed the true block maximum.
    """
    mu = check_strategy(tree, mu)
    p = utility_polynomial(tree)
    base = evaluate(p, mu)
    _, pr = _visit_data(tree, mu)
    gaps, cert = {}, 0.0
    for i, s in enumerate(tree.info_sets):
        if pr[i] == 0:
            continue
        br = block_best_response(p, mu, i, cfg)
        gap = br.value - base
        gaps[s.label] = gap if gap > 0 else 0 * gap
        cert = max(cert, br.certificate_gap)
    note = f"certified up to block-solver gap {cert:.3g}"
    return _report(EDT, gaps, eps, certificate_gap=cert, note=note)


def matched_cdt_tolerance(tree: GameTree, mu, edt_gap) -> float:
    """CDT tolerance implied by an EDT gap of ``edt_gap`` at every reached info set.

    If no block deviation gains more than t, then along the segment toward any
    pure action the directional derivative d obeys d <= t/s + s*C/2 for every
    step s in (0, 1], with C bounding the block's second derivatives. Dividing
    the best such bound by Fr(I | mu) gives the CDT gap bound.
    """
    mu = check_strategy(tree, mu)
    p = utility_polynomial(tree)
    fr, _ = _visit_data(tree, mu)
    t = float(edt_gap)
    worst = 0.0
    for i, s in enumerate(tree.info_sets):
        if fr[i] == 0:
            continue
        c = float(sum(
            (p.partial(i, j).partial(i, k).coefficient_sum() for j in range(s.size) for k in range(s.size)),
            Fraction(0),
        ))
        if c == 0:
            bound = t
        else:
            step = min(1.0, sqrt(2 * t / c))
            bound = t / step + step * c / 2 if step > 0 else 0.0
        worst = max(worst, bound / float(fr[i]))
    return worst


# --- frequency lower bounds -------------------------------------------------------


def _pure_points(shape, blocks):
    ranges = [range(shape[i]) if i in blocks else range(1) for i in range(len(shape))]
    for choice in itertools.product(*ranges):
        yield tuple(
            tuple(Fraction(int(j == choice[i])) for j in range(m)) if i in blocks else tuple(Fraction(1, m) for _ in range(m))
            for i, m in enumerate(shape)
        )


def _grid_minimum(f: Polynomial, blocks: list[int], k: int) -> float:
    """Minimum of f over the lattice at resolution k in the given blocks (others unused by f)."""
    lats = [np.array(list(compositions(f.shape[i], k)), dtype=float) / k for i in blocks]
    sizes = [len(l) for l in lats]
    total = int(np.prod(sizes)) if sizes else 1
    off = np.concatenate([[0], np.cumsum(f.shape)]).astype(int)
    comp = f.compiled
    best = np.inf
    chunk = 8192
    for s in range(0, total, chunk):
        idx = np.arange(s, min(total, s + chunk))
        multi = np.unravel_index(idx, sizes) if sizes else ()
        pts = np.zeros((len(idx), comp.n))
        for b, i in enumerate(blocks):
            pts[:, off[i]:off[i + 1]] = lats[b][multi[b]]
        best = min(best, float(comp.values(pts).min()))
    return best


def frequency_lower_bound(tree: GameTree, cfg: SolverConfig | None = None) -> FrequencyBound | None:
    """A lambda > 0 with Fr(I | mu) = 0 for all mu or Fr(I | mu) >= lambda for all mu, per info set.

    Strategy-independent frequencies are read off symbolically. Otherwise each
    frequency polynomial (nonnegative coefficients) is checked for zeros at
    pure strategies; if it has one but is not identically zero it takes
    arbitrarily small positive values and no bound exists. If it has none, the
    bound is the larger of its constant term and a lattice minimum minus the
    lattice's Lipschitz slack.
    """
    cfg = cfg or SolverConfig()
    const = constant_frequencies(tree)
    if const is not None:
        minima = {label: fr for label, (fr, _) in const.items()}
        positive = [v for v in minima.values() if v > 0]
        return FrequencyBound(min(positive, default=Fraction(1)), True, minima)
    minima = {}
    for i, s in enumerate(tree.info_sets):
        f = frequency_polynomial(tree, i)
        reduced = f.on_simplex()
        if reduced.is_zero():
            minima[s.label] = Fraction(0)
            continue
        if reduced.is_constant():
            minima[s.label] = reduced.constant_term
            continue
        blocks = sorted({v[0] for v in f.variables()})
        if np.prod([tree.shape[b] for b in blocks]) > cfg.budget:
            return None
        if any(evaluate(f, pt) == 0 for pt in _pure_points(tree.shape, set(blocks))):
            return None
        bound = f.constant_term
        slack = lipschitz_bound_linf(f)
        k = cfg.grid_k
        while bound <= 0 and product_lattice_size([tree.shape[b] for b in blocks], k) <= cfg.budget:
            candidate = _grid_minimum(f, blocks, k) - float(slack) / k
            if candidate > 0:
                bound = Fraction(candidate)
                break
            k *= 2
        if bound <= 0:
            return None
        minima[s.label] = bound
    positive = [v for v in minima.values() if v > 0]
    return FrequencyBound(min(positive, default=Fraction(1)), False, minima)


# --- approximate -> well-supported ---------------------------------------------------


def well_supported_guarantee(tree: GameTree, eps, lipschitz) -> float:
    """3 * L * |N| * sqrt(eps): the well-supportedness of :func:`well_supported_from_approx` output."""
    return 3 * float(lipschitz) * tree.num_nodes * sqrt(float(eps))


def well_supported_from_approx(tree: GameTree, mu, eps, lam, lipschitz) -> tuple:
    """Drop actions with probability <= sqrt(eps) at reached info sets and spread their mass evenly.

    For an eps-approximate CDT equilibrium, with ``lam`` a frequency lower bound
    and ``lipschitz`` from :func:`imperfect_recall.polynomial.eu_lipschitz_bound`,
    the result is (3 L |N| sqrt(eps))-well-supported and moves no entry by more
    than sqrt(eps) * |N|.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if lam is None or lam <= 0:
        raise ValueError("lambda must be a positive frequency lower bound")
    if lipschitz < 1:
        raise ValueError("the Lipschitz constant must be at least 1")
    mu = check_strategy(tree, mu)
    root = sqrt(float(eps))
    for s in tree.info_sets:
        if root >= 1 / s.size:
            raise ValueError(f"sqrt(eps) = {root:.3g} must be below 1/{s.size} (info set {s.label})")
    fr, _ = _visit_data(tree, mu)
    exact = is_exact_strategy(mu)
    out = []
    for i, block in enumerate(mu):
        if fr[i] == 0:
            out.append(block)
            continue
        low = [j for j, a in enumerate(block) if a <= root]
        if not low:
            out.append(block)
            continue
        removed = sum((block[j] for j in low), Fraction(0) if exact else 0.0)
        share = removed / (len(block) - len(low))
        out.append(tuple(0 * a if j in low else a + share for j, a in enumerate(block)))
    return tuple(out)


# --- hierarchy ---------------------------------------------------------------------


@dataclass(frozen=True)
class HierarchyRow:
    name: str
    value: object
    exante: bool
    edt: bool
    cdt: bool
    cdt_matched: bool


@dataclass(frozen=True)
class HierarchyReport:
    rows: tuple
    optimum: object
    tolerance: float
    consistent: bool


def hierarchy_check(
    tree: GameTree,
    mu_exante,
    mu_edt,
    mu_cdt,
    tol: float = 1e-9,
    cfg: SolverConfig | None = None,
    optimum=None,
) -> HierarchyReport:
    """Classify three strategies by ex-ante optimality, EDT and CDT, and check the implications.

    Ex-ante optimal means within ``tol`` of the reference optimum (the better of
    the multi-start solver and the lattice oracle unless ``optimum`` is given).
    The implications checked are: ex-ante optimal => EDT at tol, and EDT at tol
    => CDT at the matched tolerance of :func:`matched_cdt_tolerance`.
    """
    cfg = cfg or SolverConfig()
    p = utility_polynomial(tree)
    if optimum is None:
        optimum = solve_exante(p, cfg).value
        if product_lattice_size(p.shape, cfg.grid_k) <= default_node_budget():
            optimum = max(float(optimum), float(brute_force_grid(p, cfg.grid_k).value))
    rows = []
    consistent = True
    for name, mu in (("exante", mu_exante), ("edt", mu_edt), ("cdt", mu_cdt)):
        mu = check_strategy(tree, mu)
        value = evaluate(p, mu)
        ex = float(value) >= float(optimum) - tol
        edt = verify_edt(tree, mu, tol, cfg)
        cdt = verify_cdt_approx(tree, mu, tol).verdict
        matched_tol = matched_cdt_tolerance(tree, mu, float(edt.max_gap) + edt.certificate_gap)
        matched = verify_cdt_approx(tree, mu, max(tol, matched_tol)).verdict
        if ex and not edt.verdict:
            consistent = False
        if edt.verdict and not matched:
            consistent = False
        rows.append(HierarchyRow(name, value, ex, edt.verdict, cdt, matched))
    return HierarchyReport(tuple(rows), optimum, tol, consistent)
