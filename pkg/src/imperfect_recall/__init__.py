"""Single-player extensive-form games with imperfect recall."""

from .beliefs import (
    cdt_action_values,
    derivative_identity,
    eu_cdt_gt,
    eu_edt_gdh,
    gdh_beliefs,
    gt_beliefs,
)
from .builtins import builtin_game, builtin_games, builtin_names
from .equilibrium import (
    frequency_lower_bound,
    hierarchy_check,
    kkt_certificate,
    verify_cdt_approx,
    verify_cdt_well_supported,
    verify_edt,
    well_supported_from_approx,
)
from .formats import parse_game, parse_polynomial, parse_strategy, serialize_game, serialize_strategy
from .game import (
    Chance,
    Decision,
    GameError,
    GameTree,
    InvalidStrategy,
    Terminal,
    UnreachedInfoSet,
    build_game,
    check_strategy,
    expected_utility,
    history,
    info_set_stats,
    pure_strategy,
    reach_prob,
    strategy_from_labels,
    validate_game,
)
from .limits import BudgetExceeded
from .polynomial import (
    Polynomial,
    evaluate,
    format_polynomial,
    game_from_polynomial_v1,
    game_from_polynomial_v2,
    gradient,
    lipschitz_bound,
    utility_polynomial,
)
from .solvers import (
    SolverConfig,
    block_best_response,
    brute_force_grid,
    decide_targets,
    edt_best_response_dynamics,
    projected_gradient_kkt,
    solve_exante,
)

__version__ = "0.1.0"
