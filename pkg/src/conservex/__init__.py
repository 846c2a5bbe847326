"""Conservative exploration: budget calculus, BudgetFirst and LCBCE, four base learners, and a harness."""
from . import kernels
from .conservative import (BudgetState, ConfigError, InfeasibleBaselineError, budget, budget_first_decide,
                           budget_first_schedule, lcbce_decide, proxy_budget, run_conservative)
from .core import (BaselineSpec, RoundRecord, RunTrace, constraint_slack, constraint_violations, cumulative_regret,
                   regret_curve, slack_curve)

__version__ = "0.1.0"

__all__ = [
    "kernels", "BudgetState", "ConfigError", "InfeasibleBaselineError", "budget", "budget_first_decide",
    "budget_first_schedule", "lcbce_decide", "proxy_budget", "run_conservative",
    "BaselineSpec", "RoundRecord", "RunTrace", "constraint_slack", "constraint_violations", "cumulative_regret",
    "regret_curve", "slack_curve",
]
