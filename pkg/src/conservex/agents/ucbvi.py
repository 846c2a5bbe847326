"""UCBVI (Bernstein or Hoeffding bonuses) with a pessimistic second pass.

The lower pass evaluates the optimistic greedy policy with the bonus negated;
it does not re-maximise, so lambda bounds the value of the policy that is
actually played.
"""
from __future__ import annotations

import math

import numpy as np

from .. import kernels
from .base import Agent, ConfidencePolicy

BONUS_MODES = ("bernstein", "hoeffding")


class UcbviState(Agent):
    kind = "mdp"

    def __init__(self, S: int, A: int, H: int, delta: float = 0.1, horizon: int = 1,
                 r_max: float = 1.0, bonus_mode: str = "bernstein", s1: int = 0):
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        if bonus_mode not in BONUS_MODES:
            raise ValueError(f"bonus_mode must be one of {BONUS_MODES}")
        self.S, self.A, self.H = S, A, H
        self.delta = delta
        self.horizon = horizon
        self.r_max = r_max
        self.bonus_mode = bonus_mode
        self.s1 = s1
        self.N = np.zeros((H, S, A), dtype=np.int64)
        self.next_counts = np.zeros((H, S, A, S), dtype=np.int64)
        self.reward_sums = np.zeros((H, S, A))
        self.r_hat = np.zeros((H, S, A))
        self.p_hat = np.zeros((H, S, A, S))
        self.Vu = np.zeros((H + 1, S))
        self.Vl = np.zeros((H + 1, S))
        self.bonus = np.full((H, S, A), np.inf)
        self.pi = np.zeros((H, S), dtype=np.int64)
        self.n_episodes = 0
        self._planned = False

    @property
    def log_term(self) -> float:
        return math.log(5.0 * self.S * self.A * self.H * max(self.horizon, 1) / self.delta)

    @property
    def bernstein(self) -> bool:
        return self.bonus_mode == "bernstein"

    def plan(self) -> ConfidencePolicy:
        return ucbvi_plan(self)

    def propose(self) -> ConfidencePolicy:
        return self.plan()

    def update(self, policy, trajectory) -> None:
        for h in range(self.H):
            s, a, s2 = trajectory.states[h], trajectory.actions[h], trajectory.states[h + 1]
            self.N[h, s, a] += 1
            self.next_counts[h, s, a, s2] += 1
            self.reward_sums[h, s, a] += trajectory.rewards[h]
            n = self.N[h, s, a]
            self.r_hat[h, s, a] = self.reward_sums[h, s, a] / n
            self.p_hat[h, s, a] = self.next_counts[h, s, a] / n
        self.n_episodes += 1
        self._planned = False

    def lower_bound(self, policy) -> float:
        if not self._planned:
            self.plan()
        Vl = kernels.ucbvi_lower(self.N, self.r_hat, self.p_hat, self.r_max, self.bonus,
                                 np.asarray(policy, dtype=np.int64))
        return float(Vl[0, self.s1])


def ucbvi_bonus(state: UcbviState, h: int, s: int, a: int) -> float:
    """Bonus at 0-based stage ``h``, using the current optimistic values of stage h + 1."""
    n = int(state.N[h, s, a])
    if n < 1:
        raise ValueError("ucbvi_bonus needs N_h(s, a) >= 1; unvisited pairs use the optimism ceiling")
    L = state.log_term
    Hr = state.H * state.r_max
    if state.bernstein:
        nxt = state.Vu[h + 1]
        p = state.p_hat[h, s, a]
        m = float(p @ nxt)
        var = float(p @ (nxt - m) ** 2)
        return math.sqrt(2.0 * L * var / n) + 7.0 * Hr * L / (3.0 * n)
    return Hr * math.sqrt(L / (2.0 * n))


def ucbvi_plan(state: UcbviState) -> ConfidencePolicy:
    """Optimistic backward induction, then pessimistic evaluation of its greedy policy."""
    if not state._planned:
        state.Vu, state.pi, state.bonus = kernels.ucbvi_upper(
            state.N, state.r_hat, state.p_hat, state.r_max, state.log_term, state.bernstein)
        state.Vl = kernels.ucbvi_lower(state.N, state.r_hat, state.p_hat, state.r_max, state.bonus, state.pi)
        state._planned = True
    return ConfidencePolicy(policy=state.pi.copy(), lcb_value=float(state.Vl[0, state.s1]),
                            proposed_at=state.n_episodes + 1, ucb_value=float(state.Vu[0, state.s1]))
