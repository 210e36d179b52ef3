"""Size budgets shared by the constructions, grids and the CLI."""

import os

BUDGET_ENV = "IMPERFECT_RECALL_NODE_BUDGET"
DEFAULT_BUDGET = 10**6


class BudgetExceeded(RuntimeError):
    """A construction or exhaustive search would exceed the configured size budget."""


def default_node_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if not raw:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{BUDGET_ENV} must be a positive integer, got {raw!r}") from None
    if value <= 0:
        raise ValueError(f"{BUDGET_ENV} must be a positive integer, got {raw!r}")
    return value
