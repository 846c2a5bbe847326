"""UCB for K-armed bandits with a matching lower confidence bound."""
from __future__ import annotations

import math

import numpy as np

from .base import Agent, ConfidencePolicy


def psi(s: int, K: int, delta: float) -> float:
    """Confidence level 2 log(K s^3 / delta)."""
    return 2.0 * math.log(K * float(s) * s * s / delta)


class UcbState(Agent):
    """Counts and reward sums of arms 1..K (arm 0, the baseline, is never tracked)."""

    def __init__(self, K: int, delta: float = 0.1):
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self.K = K
        self.delta = delta
        self.counts = np.zeros(K, dtype=np.int64)
        self.sums = np.zeros(K)

    @property
    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        return ucb_indices(self)

    def propose(self) -> ConfidencePolicy:
        return ucb_propose(self)

    def update(self, arm: int, reward: float) -> None:
        self.counts[arm - 1] += 1
        self.sums[arm - 1] += reward

    def lower_bound(self, arm: int) -> float:
        return float(ucb_indices(self)[1][arm - 1])


def ucb_indices(state: UcbState) -> tuple[np.ndarray, np.ndarray]:
    """Per-arm (ucb, lcb); an unpulled arm gets (+inf, 0)."""
    ucb = np.full(state.K, np.inf)
    lcb = np.zeros(state.K)
    for i, n in enumerate(state.counts):
        if n == 0:
            continue
        mean = state.sums[i] / n
        bonus = math.sqrt(psi(n, state.K, state.delta) / n)
        ucb[i] = mean + bonus
        lcb[i] = max(0.0, mean - bonus)
    return ucb, lcb


def ucb_propose(state: UcbState) -> ConfidencePolicy:
    ucb, lcb = ucb_indices(state)
    i = int(np.argmax(ucb))  # first maximiser, i.e. lowest index on ties
    return ConfidencePolicy(policy=i + 1, lcb_value=float(lcb[i]),
                            proposed_at=int(state.counts.sum()) + 1, ucb_value=float(ucb[i]))
