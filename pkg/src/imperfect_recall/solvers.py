"""Numerical solvers: projected gradient ascent, multi-start ex-ante search,
block best responses, best-response dynamics, a brute-force lattice oracle and
desk-scale decision oracles.

All iterative work happens in float64 on flat vectors; block ``i`` occupies
``x[offsets[i]:offsets[i+1]]``.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .game import GameTree, check_strategy, is_exact_strategy
from .limits import BudgetExceeded, default_node_budget
from .polynomial import (
    Polynomial,
    evaluate,
    lipschitz_bound,
    lipschitz_bound_linf,
    utility_polynomial,
)
from .simplex import (
    compositions,
    lattice_array,
    lattice_size,
    product_lattice_size,
    project_blocks,
)


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 5000
    step: float | None = None  # initial step; None means 1 / (L_U + 1)
    backtrack: float = 0.5
    armijo: float = 1e-4
    tol: float = 1e-10
    restarts: int = 8
    seed: int = 0
    grid_k: int = 16
    node_budget: int | None = None
    corner_cap: int = 64
    block_points: int = 20000  # lattice points per block best response

    def __post_init__(self):
        for name in ("max_iters", "restarts", "grid_k", "corner_cap", "block_points"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")
        if self.armijo <= 0 or self.tol <= 0:
            raise ValueError("armijo and tol must be positive")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def budget(self) -> int:
        return self.node_budget if self.node_budget is not None else default_node_budget()


@dataclass(frozen=True)
class RestartSummary:
    start: str
    value: float
    residual: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SolveResult:
    strategy: tuple
    value: float
    kkt_residual: float
    iterations: int
    status: str  # "converged" | "budget_exhausted"
    trace: tuple = field(default=())


@dataclass(frozen=True)
class BlockResponse:
    alpha: tuple
    value: object
    certificate_gap: float
    resolution: int


@dataclass(frozen=True)
class GridResult:
    strategy: tuple
    value: Fraction
    points: int
    resolution: int


@dataclass(frozen=True)
class Decision:
    query: str
    verdict: str  # "yes" | "no-evidence" | "inconclusive"
    witness: tuple | None = None
    value: object = None
    detail: str = ""


# --- shared plumbing -------------------------------------------------------------


def _polynomial_of(source) -> Polynomial:
    if isinstance(source, Polynomial):
        return source
    if isinstance(source, GameTree):
        return utility_polynomial(source)
    raise TypeError("expected a GameTree or a Polynomial")


def _offsets(shape: Sequence[int]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(shape)]).astype(int)


def flatten(mu) -> np.ndarray:
    return np.array([float(x) for b in mu for x in b], dtype=float)


def unflatten(x: np.ndarray, shape: Sequence[int]) -> tuple:
    off = _offsets(shape)
    return tuple(tuple(float(v) for v in x[a:b]) for a, b in zip(off[:-1], off[1:]))


def kkt_residual_flat(g: np.ndarray, x: np.ndarray, offsets: Sequence[int]) -> float:
    """max over blocks and supported actions of (largest partial in block - own partial)."""
    r = 0.0
    for a, b in zip(offsets[:-1], offsets[1:]):
        if b == a:
            continue
        gb = g[a:b]
        sup = x[a:b] > 0
        r = max(r, float(gb.max() - gb[sup].min()))
    return r


def initial_step(p: Polynomial) -> float:
    lu = max((float(lipschitz_bound(p.partial(i, j))) for i, j in p.all_vars()), default=0.0)
    return 1.0 / (lu + 1.0)


def _ascent(p: Polynomial, x0: np.ndarray, cfg: SolverConfig, eta0: float):
    """Projected gradient ascent with Armijo backtracking.

    Accepted iterates never lose more than float evaluation noise in value.

    Returns (best x, value, residual, iterations, converged, values) where the
    best iterate is the one with the smallest KKT residual seen.
    """
    comp = p.compiled
    off = comp.offsets
    x = project_blocks(np.asarray(x0, dtype=float), off)
    f = comp.value(x)
    g = comp.gradient(x)
    r = kkt_residual_flat(g, x, off)
    best = (r, x, f)
    values = [f]
    noise = 64 * np.finfo(float).eps * (1.0 + float(np.abs(comp.coefs).sum()))
    eta = eta0
    eta_max = eta0 * 2.0**20
    it = 0
    while it < cfg.max_iters and r > cfg.tol:
        it += 1
        while True:
            y = project_blocks(x + eta * g, off)
            d = y - x
            if not d.any():
                y = None
                break
            fy = comp.value(y)
            gy = comp.gradient(y)
            slope = float(g @ d)
            gain = fy - f
            if abs(gain) <= noise:
                # value differences are round-off here; the trapezoid rule on
                # the directional derivatives is exact for quadratics
                gain = 0.5 * (slope + float(gy @ d))
            if gain >= cfg.armijo * slope:
                break
            eta *= cfg.backtrack
            if eta < 1e-300:
                y = None
                break
        if y is None:  # projection fixed point or no admissible step: stationary in float terms
            break
        x, f, g = y, fy, gy
        values.append(f)
        r = kkt_residual_flat(g, x, off)
        if r < best[0]:
            best = (r, x, f)
        eta = min(eta / cfg.backtrack, eta_max)
    r, x, f = best
    return x, f, r, it, r <= cfg.tol, values


def projected_gradient_kkt(source, cfg: SolverConfig | None = None, start=None) -> SolveResult:
    """One projected-gradient run from ``start`` (uniform by default) to a KKT point of U."""
    cfg = cfg or SolverConfig()
    p = _polynomial_of(source)
    x0 = flatten(start) if start is not None else flatten(_uniform(p.shape))
    eta0 = cfg.step if cfg.step is not None else initial_step(p)
    x, f, r, it, ok, _ = _ascent(p, x0, cfg, eta0)
    status = "converged" if ok else "budget_exhausted"
    summary = RestartSummary("start" if start is not None else "uniform", f, r, it, ok)
    return SolveResult(unflatten(x, p.shape), f, r, it, status, (summary,))


def _uniform(shape):
    return tuple(tuple(Fraction(1, m) for _ in range(m)) for m in shape)


def _starts(shape: Sequence[int], cfg: SolverConfig):
    yield "uniform", flatten(_uniform(shape))
    corners = itertools.islice(itertools.product(*[range(m) for m in shape]), cfg.corner_cap)
    for choice in corners:
        x = np.zeros(sum(shape))
        off = _offsets(shape)
        for i, j in enumerate(choice):
            x[off[i] + j] = 1.0
        yield "corner" + "".join(f"/{j + 1}" for j in choice), x
    rng = np.random.default_rng(cfg.seed)
    for r in range(cfg.restarts):
        x = np.concatenate([rng.dirichlet(np.ones(m)) for m in shape]) if shape else np.zeros(0)
        yield f"random{r}", x


def _multistart(p: Polynomial, cfg: SolverConfig):
    eta0 = cfg.step if cfg.step is not None else initial_step(p)
    runs = []
    for name, x0 in _starts(p.shape, cfg):
        x, f, r, it, ok, _ = _ascent(p, x0, cfg, eta0)
        runs.append((name, x, f, r, it, ok))
    return runs


def solve_exante(source, cfg: SolverConfig | None = None) -> SolveResult:
    """Best KKT point over starts at the uniform strategy, pure corners and random interior points.

    No global optimality is claimed; compare with :func:`brute_force_grid`.
    """
    cfg = cfg or SolverConfig()
    p = _polynomial_of(source)
    runs = _multistart(p, cfg)
    # highest value wins; ties keep the earliest start (order is fixed)
    best = max(range(len(runs)), key=lambda k: (runs[k][2], -k))
    name, x, f, r, _, ok = runs[best]
    trace = tuple(RestartSummary(n, v, res, it, c) for n, _, v, res, it, c in runs)
    total = sum(run[4] for run in runs)
    return SolveResult(unflatten(x, p.shape), f, r, total, "converged" if ok else "budget_exhausted", trace)


# --- block best responses ----------------------------------------------------------


def _single_block(q: Polynomial, i: int) -> Polynomial:
    m = q.shape[i]
    return Polynomial((m,), [(tuple(((0, j), e) for (_, j), e in mono), c) for mono, c in q])


def _block_resolution(m: int, cfg: SolverConfig) -> int:
    if m == 1:
        return 1
    lo, hi = 1, 10**4
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if lattice_size(m, mid) <= cfg.block_points:
            lo = mid
        else:
            hi = mid - 1
    return lo


def block_best_response(source, mu, info_set: int, cfg: SolverConfig | None = None) -> BlockResponse:
    """Maximize U over block ``info_set`` with the other blocks of ``mu`` fixed.

    Linear blocks are solved exactly at a vertex. Otherwise a dense lattice is
    searched and the best few points are refined by projected gradient ascent.
    ``certificate_gap`` bounds how far ``value`` may be below the true block
    maximum: (best lattice value + Lipschitz(max-norm) / k) - value.
    """
    cfg = cfg or SolverConfig()
    p = _polynomial_of(source)
    exact = is_exact_strategy(mu)
    q = _single_block(p.restrict_to_block(mu, info_set), info_set)
    m = q.shape[0]
    if q.degree <= 1:
        coefs = [q.terms.get((((0, j), 1),), 0) for j in range(m)]
        j = max(range(m), key=lambda k: (coefs[k], -k))
        alpha = tuple(Fraction(int(k == j)) for k in range(m))
        if not exact:
            alpha = tuple(float(a) for a in alpha)
        return BlockResponse(alpha, evaluate(q, [alpha]), 0.0, 1)
    k = _block_resolution(m, cfg)
    pts = lattice_array(m, k)
    vals = q.compiled.values(pts)
    order = np.argsort(-vals, kind="stable")
    grid_best = float(vals[order[0]])
    best_x, best_v = pts[order[0]], grid_best
    refined = False
    refine_cfg = SolverConfig(max_iters=min(cfg.max_iters, 2000), tol=cfg.tol, seed=cfg.seed)
    eta0 = initial_step(q)
    for idx in order[:3]:
        x, f, *_ = _ascent(q, pts[idx], refine_cfg, eta0)
        if f > best_v + 1e-12 * (1.0 + abs(best_v)):
            best_x, best_v, refined = x, f, True
    lip = float(lipschitz_bound_linf(q))
    gap = max(0.0, grid_best + lip / k - best_v)
    if exact and not refined:
        counts = next(itertools.islice(compositions(m, k), int(order[0]), None))
        alpha = tuple(Fraction(c, k) for c in counts)
        return BlockResponse(alpha, evaluate(q, [alpha]), gap, k)
    alpha = tuple(float(v) for v in best_x)
    return BlockResponse(alpha, best_v, gap, k)


def edt_best_response_dynamics(source, cfg: SolverConfig | None = None, start=None) -> SolveResult:
    """Round-robin block best responses; U never decreases along accepted updates."""
    cfg = cfg or SolverConfig()
    p = _polynomial_of(source)
    mu = [tuple(b) for b in (start if start is not None else _uniform(p.shape))]
    check_strategy(p.shape, mu)
    current = evaluate(p, mu)
    trace = [current]
    sweeps = 0
    improved = True
    max_sweeps = min(cfg.max_iters, 1000)
    while improved and sweeps < max_sweeps:
        sweeps += 1
        improved = False
        for i in range(len(p.shape)):
            br = block_best_response(p, mu, i, cfg)
            if br.value > current + max(cfg.tol, 1e-12 * (1 + abs(float(current)))):
                mu[i] = br.alpha
                if not is_exact_strategy(mu):
                    mu = [tuple(float(v) for v in b) for b in mu]
                current = evaluate(p, mu)
                trace.append(current)
                improved = True
    x = flatten(mu)
    comp = p.compiled
    r = kkt_residual_flat(comp.gradient(x), x, comp.offsets) if p.shape else 0.0
    status = "converged" if not improved else "budget_exhausted"
    summary = RestartSummary("start" if start is not None else "uniform", float(current), r, sweeps, not improved)
    return SolveResult(tuple(mu), current, r, sweeps, status, (summary,) + tuple(float(v) for v in trace))


# --- brute force lattice ---------------------------------------------------------------


def _lattice_points(shape, k, budget):
    size = product_lattice_size(shape, k)
    if size > budget:
        raise BudgetExceeded(f"lattice at resolution {k} has {size} points, budget is {budget}")
    counts = [np.array(list(compositions(m, k)), dtype=np.int64).reshape(-1, m) for m in shape]
    return counts, size


def brute_force_grid(source, k: int, budget: int | None = None, chunk: int = 8192) -> GridResult:
    """Exhaustive maximization of U over the product lattice with denominator k.

    Floats screen the lattice; the near-maximal points are re-evaluated exactly
    and the exact maximum is returned (ties go to the first point in lattice
    order).
    """
    if k <= 0:
        raise ValueError("resolution must be positive")
    p = _polynomial_of(source)
    budget = default_node_budget() if budget is None else budget
    counts, size = _lattice_points(p.shape, k, budget)
    if not p.shape:
        return GridResult((), evaluate(p, ()), 1, k)
    comp = p.compiled
    sizes = [len(c) for c in counts]
    vals = np.empty(size)
    for s in range(0, size, chunk):
        idx = np.arange(s, min(size, s + chunk))
        multi = np.unravel_index(idx, sizes)
        pts = np.concatenate([counts[b][multi[b]] for b in range(len(sizes))], axis=1) / k
        vals[s:s + len(idx)] = comp.values(pts)
    top = vals.max()
    scale = 1.0 + abs(top) + float(p.coefficient_sum())
    cand = np.flatnonzero(vals >= top - 1e-9 * scale)[:10000]
    best_mu, best_v = None, None
    for flat in cand:
        multi = np.unravel_index(int(flat), sizes)
        mu = tuple(tuple(Fraction(int(c), k) for c in counts[b][multi[b]]) for b in range(len(sizes)))
        v = evaluate(p, mu)
        if best_v is None or v > best_v:
            best_mu, best_v = mu, v
    return GridResult(best_mu, best_v, size, k)


def iter_lattice(shape: Sequence[int], k: int):
    """All exact lattice strategies at resolution k, in lattice order."""
    blocks = [[tuple(Fraction(c, k) for c in comp) for comp in compositions(m, k)] for m in shape]
    return itertools.product(*blocks)


# --- decision oracles ------------------------------------------------------------------

QUERIES = ("exante", "cdt_eq_value", "edt_eq_value", "infoset_eu_cdt", "infoset_eu_edt")


def decide_targets(
    tree: GameTree,
    query: str,
    target,
    eps,
    cfg: SolverConfig | None = None,
    info_set: int | str | None = None,
    check_cap: int = 500,
) -> Decision:
    """Search pure strategies, the lattice at ``cfg.grid_k`` and solver outputs for a witness.

    A witness must satisfy the query's side condition and reach value >= target - eps.
    The answer is "yes" (with witness), "no-evidence" (the whole lattice was
    searched and nothing qualified) or "inconclusive" (the lattice was over
    budget or too many candidates to check). An exact "no" is never claimed.
    """
    from .beliefs import eu_cdt_gt, eu_edt_gdh
    from .equilibrium import verify_cdt_approx, verify_edt
    from .game import info_set_stats

    if query not in QUERIES:
        raise ValueError(f"unknown query {query!r}; choose from {QUERIES}")
    cfg = cfg or SolverConfig()
    p = utility_polynomial(tree)
    threshold = Fraction(target) - Fraction(eps) if not isinstance(eps, float) else float(target) - eps
    if query.startswith("infoset"):
        if info_set is None:
            raise ValueError(f"query {query} needs an info set")
        i = tree.info_set_index(info_set)

    def score(mu):
        """Value relevant to the query, or None when the side condition fails."""
        if query == "exante":
            return evaluate(p, mu)
        if query == "cdt_eq_value":
            return evaluate(p, mu) if verify_cdt_approx(tree, mu, eps).verdict else None
        if query == "edt_eq_value":
            return evaluate(p, mu) if verify_edt(tree, mu, eps, cfg).verdict else None
        stats = info_set_stats(tree, mu, i)
        if query == "infoset_eu_cdt":
            return eu_cdt_gt(tree, mu, i, mu[i]) if stats.visit_freq > 0 else None
        return eu_edt_gdh(tree, mu, i, mu[i]) if stats.reach_prob > 0 else None

    # the ex-ante value bounds nothing for the info-set queries, so only prefilter the others
    prefilter = query in ("exante", "cdt_eq_value", "edt_eq_value")

    def scan(candidates):
        checked = 0
        for mu in candidates:
            if prefilter and evaluate(p, mu) < threshold:
                continue
            checked += 1
            if checked > check_cap:
                return None, False
            v = score(mu)
            if v is not None and v >= threshold:
                return (mu, v), True
        return None, True

    # pure strategies, then the lattice
    found, complete = scan(iter_lattice(p.shape, 1))
    grid_complete = False
    if found is None:
        try:
            if product_lattice_size(p.shape, cfg.grid_k) > cfg.budget:
                raise BudgetExceeded("lattice over budget")
            found, grid_complete = scan(iter_lattice(p.shape, cfg.grid_k))
            grid_complete = grid_complete and complete
        except BudgetExceeded:
            grid_complete = False
    if found is None:
        runs = _multistart(p, cfg)
        runs.sort(key=lambda run: -run[2])
        found, _ = scan(unflatten(run[1], p.shape) for run in runs)
    if found is not None:
        mu, v = found
        return Decision(query, "yes", mu, v, "witness satisfies the query at target - eps")
    if grid_complete:
        return Decision(query, "no-evidence", None, None,
                        f"no lattice point at resolution {cfg.grid_k} or solver output qualifies")
    return Decision(query, "inconclusive", None, None, "lattice search incomplete (budget or candidate cap)")
