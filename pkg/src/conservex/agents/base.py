from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class ConfidencePolicy:
    """A proposed policy with its lower-confidence value.

    ``policy`` is an arm number (MAB, 1..K), an action index (linear bandit) or a
    stage-indexed ``(H, S)`` action table (MDPs). ``proposed_at`` is the
    non-conservative round t' + 1 at which it was proposed.
    """

    policy: Any
    lcb_value: float
    proposed_at: int
    ucb_value: Optional[float] = None


class Agent:
    """Interface the conservative meta-algorithms drive.

    ``propose`` must be deterministic given the agent's data, since LCBCE may
    ask for the same proposal on consecutive baseline rounds.
    """

    kind = "bandit"

    def propose(self) -> ConfidencePolicy:
        raise NotImplementedError

    def update(self, policy, observation) -> None:
        raise NotImplementedError

    def lower_bound(self, policy) -> float:
        """Lower bound on the value of ``policy`` under the current data."""
        raise NotImplementedError


class ZeroLcbAgent(Agent):
    """Wraps an agent and reports lambda = 0 for everything."""

    def __init__(self, inner: Agent):
        self.inner = inner
        self.kind = inner.kind

    def propose(self) -> ConfidencePolicy:
        p = self.inner.propose()
        return ConfidencePolicy(p.policy, 0.0, p.proposed_at, p.ucb_value)

    def update(self, policy, observation) -> None:
        self.inner.update(policy, observation)

    def lower_bound(self, policy) -> float:
        return 0.0


class OracleLcbAgent(Agent):
    """Wraps an agent and reports the exact value as lambda (simulation only)."""

    def __init__(self, inner: Agent, value_fn):
        self.inner = inner
        self.value_fn = value_fn
        self.kind = inner.kind

    def propose(self) -> ConfidencePolicy:
        p = self.inner.propose()
        return ConfidencePolicy(p.policy, self.value_fn(p.policy), p.proposed_at, p.ucb_value)

    def update(self, policy, observation) -> None:
        self.inner.update(policy, observation)

    def lower_bound(self, policy) -> float:
        return self.value_fn(policy)


class UniformAgent(Agent):
    """Linear-regret control: a uniformly random arm/action each proposal, lambda = 0.

    ``first`` is 1 for MAB arm numbering, 0 for action indices. One
    ``rng.integers(n)`` draw per proposal.
    """

    def __init__(self, n: int, rng: np.random.Generator, first: int = 1):
        self.n = n
        self.rng = rng
        self.first = first
        self.t = 0

    def propose(self) -> ConfidencePolicy:
        self.t += 1
        return ConfidencePolicy(int(self.rng.integers(self.n)) + self.first, 0.0, self.t)

    def update(self, policy, observation) -> None:
        pass

    def lower_bound(self, policy) -> float:
        return 0.0
