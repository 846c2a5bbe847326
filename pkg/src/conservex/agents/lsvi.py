"""LSVI-UCB on a finite-state linear MDP.

The replay buffer is kept per stage, but planning uses the equivalent
sufficient statistics: with finitely many states,

    sum_tau phi_tau [r_tau + V(x'_tau)] = b_h + M_h V,

where b_h = sum phi_tau r_tau and M_h[:, s'] = sum of phi_tau over transitions
landing in s'. This makes a plan O(d^2 S A H) instead of O(episodes).
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .. import kernels
from .base import Agent, ConfidencePolicy


def default_beta(d: int, H: int, horizon: int, delta: float, c: float = 1.0) -> float:
    return c * d * H * math.sqrt(math.log(2.0 * d * max(horizon, 1) * H / delta))


class LsviUcbState(Agent):
    kind = "mdp"

    def __init__(self, phi: np.ndarray, H: int, delta: float = 0.1, horizon: int = 1,
                 lam_reg: float = 1.0, c_beta: float = 1.0, beta: Optional[float] = None,
                 r_max: float = 1.0, s1: int = 0):
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self.phi = np.ascontiguousarray(phi, dtype=float)
        self.S, self.A, self.d = self.phi.shape
        self.H = H
        self.delta = delta
        self.horizon = horizon
        self.lam_reg = lam_reg
        self.beta = default_beta(self.d, H, horizon, delta, c_beta) if beta is None else beta
        self.r_max = r_max
        self.s1 = s1
        d = self.d
        self.Lambda = np.repeat((lam_reg * np.eye(d))[None], H, axis=0)
        self.Lambda_inv = np.repeat((np.eye(d) / lam_reg)[None], H, axis=0)
        self.b = np.zeros((H, d))
        self.M = np.zeros((H, d, self.S))
        self.buffer: list[list[tuple[int, int, float, int]]] = [[] for _ in range(H)]
        self.n_episodes = 0
        self._plan = None

    def add(self, h: int, s: int, a: int, r: float, s2: int) -> None:
        f = self.phi[s, a]
        self.buffer[h].append((s, a, r, s2))
        self.Lambda[h] += np.outer(f, f)
        kernels.sherman_morrison(self.Lambda_inv[h], f)
        self.b[h] += r * f
        self.M[h][:, s2] += f
        self._plan = None

    def update(self, policy, trajectory) -> None:
        for h in range(self.H):
            self.add(h, int(trajectory.states[h]), int(trajectory.actions[h]),
                     float(trajectory.rewards[h]), int(trajectory.states[h + 1]))
        self.n_episodes += 1

    def _planned(self):
        if self._plan is None:
            bonus = kernels.lsvi_bonus(self.Lambda_inv, self.phi, self.beta)
            Vu, pi = kernels.lsvi_upper(self.Lambda_inv, self.b, self.M, self.phi, bonus, self.r_max)
            Vl = kernels.lsvi_lower(self.Lambda_inv, self.b, self.M, self.phi, bonus, self.r_max, pi)
            self._plan = (bonus, Vu, pi, Vl)
        return self._plan

    def propose(self) -> ConfidencePolicy:
        _, Vu, pi, Vl = self._planned()
        return ConfidencePolicy(policy=pi.copy(), lcb_value=float(Vl[0, self.s1]),
                                proposed_at=self.n_episodes + 1, ucb_value=float(Vu[0, self.s1]))

    def lower_bound(self, policy) -> float:
        bonus = self._planned()[0]
        Vl = kernels.lsvi_lower(self.Lambda_inv, self.b, self.M, self.phi, bonus, self.r_max,
                                np.asarray(policy, dtype=np.int64))
        return float(Vl[0, self.s1])


def lsvi_ucb_plan(state: LsviUcbState, mode: str = "upper") -> tuple[np.ndarray, np.ndarray]:
    """Stage values (H + 1, S) in the given mode and the upper-greedy policy.

    The lower mode evaluates the upper-greedy policy with the bonus negated.
    """
    if mode not in ("upper", "lower"):
        raise ValueError(f"mode must be 'upper' or 'lower', got {mode!r}")
    _, Vu, pi, Vl = state._planned()
    return (Vu if mode == "upper" else Vl).copy(), pi.copy()
