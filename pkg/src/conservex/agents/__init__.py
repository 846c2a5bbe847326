from .base import Agent, ConfidencePolicy, OracleLcbAgent, UniformAgent, ZeroLcbAgent
from .linucb import LinUcbState, linucb_propose, linucb_update
from .lsvi import LsviUcbState, default_beta, lsvi_ucb_plan
from .ucb import UcbState, psi, ucb_indices, ucb_propose
from .ucbvi import UcbviState, ucbvi_bonus, ucbvi_plan


def lcb_sum_check(agent, played, oracle) -> float:
    """Sum of V(pi_k) - lambda_k over the proposals ``agent`` had played.

    ``oracle`` maps a policy to its true value (simulation only).
    """
    return float(sum(oracle(p.policy) - p.lcb_value for p in played))


__all__ = [
    "Agent", "ConfidencePolicy", "OracleLcbAgent", "UniformAgent", "ZeroLcbAgent",
    "LinUcbState", "linucb_propose", "linucb_update",
    "LsviUcbState", "default_beta", "lsvi_ucb_plan",
    "UcbState", "psi", "ucb_indices", "ucb_propose",
    "UcbviState", "ucbvi_bonus", "ucbvi_plan", "lcb_sum_check",
]
