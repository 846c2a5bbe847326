"""LinUCB over a finite action set, with per-action ellipsoid lower bounds."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .. import kernels
from .base import Agent, ConfidencePolicy


class LinUcbState(Agent):
    """Ridge estimate theta_hat = V^-1 m with V = lam_reg I + sum phi phi^T.

    ``gram`` is kept alongside its inverse (updated by Sherman-Morrison) so the
    determinant and the exact solve stay available for checks.
    """

    def __init__(self, d: int, delta: float = 0.1, lam_reg: float = 1.0, B_norm: float = 1.0,
                 D_norm: float = 1.0, actions: Optional[np.ndarray] = None, radius: Optional[float] = None):
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self.d = d
        self.delta = delta
        self.lam_reg = lam_reg
        self.B_norm = B_norm
        self.D_norm = D_norm
        self.radius = radius
        self.actions = None if actions is None else np.asarray(actions, dtype=float)
        self.gram = lam_reg * np.eye(d)
        self.gram_inv = np.eye(d) / lam_reg
        self.moment = np.zeros(d)
        self.theta_hat = np.zeros(d)
        self.n_updates = 0

    @property
    def beta(self) -> float:
        """Self-normalised confidence radius after ``n_updates`` observations (or the fixed ``radius``)."""
        if self.radius is not None:
            return float(self.radius)
        d, lam = self.d, self.lam_reg
        return math.sqrt(lam) * self.B_norm + math.sqrt(
            2.0 * math.log(1.0 / self.delta)
            + d * math.log((d * lam + self.n_updates * self.D_norm * self.D_norm) / (d * lam)))

    def width(self, phi) -> float:
        phi = np.asarray(phi, dtype=float)
        return self.beta * math.sqrt(phi @ self.gram_inv @ phi)

    def propose(self, actions=None) -> ConfidencePolicy:
        return linucb_propose(self, self.actions if actions is None else actions)

    def update(self, action: int, reward: float) -> None:
        linucb_update(self, self.actions[action], reward)

    def lower_bound(self, action: int) -> float:
        phi = self.actions[action]
        return max(0.0, float(self.theta_hat @ phi) - self.width(phi))


def linucb_update(state: LinUcbState, phi, x: float) -> LinUcbState:
    phi = np.ascontiguousarray(phi, dtype=float)
    state.gram += np.outer(phi, phi)
    kernels.sherman_morrison(state.gram_inv, phi)
    state.moment += x * phi
    state.theta_hat = state.gram_inv @ state.moment
    state.n_updates += 1
    return state


def linucb_propose(state: LinUcbState, actions) -> ConfidencePolicy:
    """Optimistic argmax (lowest index on ties); lambda is the clipped ellipsoid minimum."""
    actions = np.asarray(actions, dtype=float)
    if actions.ndim != 2 or len(actions) == 0:
        raise ValueError("linucb_propose needs a nonempty (n, d) action list")
    est = actions @ state.theta_hat
    width = state.beta * np.sqrt(np.einsum("ai,ij,aj->a", actions, state.gram_inv, actions))
    scores = est + width
    a = int(np.argmax(scores))
    return ConfidencePolicy(policy=a, lcb_value=max(0.0, float(est[a] - width[a])),
                            proposed_at=state.n_updates + 1, ucb_value=float(scores[a]))
