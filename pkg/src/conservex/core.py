"""Value accounting shared by every module: baseline spec, run traces, regret and
the conservative-constraint ledger.

Traces are array-backed because a single run can hold 10^5 rounds; the
``records`` view materialises :class:`RoundRecord` objects on demand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

SLACK_TOL = 1e-9


@dataclass(frozen=True)
class BaselineSpec:
    """Conservative level ``alpha``, baseline value ``v0`` and optional gap ``delta0``."""

    alpha: float
    v0: float
    delta0: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.v0 < 0.0:
            raise ValueError(f"v0 must be nonnegative, got {self.v0}")
        if self.delta0 is not None and self.delta0 < 0.0:
            raise ValueError(f"delta0 must be nonnegative, got {self.delta0}")

    @property
    def per_round_budget(self) -> float:
        return self.alpha * self.v0

    @property
    def floor(self) -> float:
        """Per-round value the constraint demands, (1 - alpha) * v0."""
        return (1.0 - self.alpha) * self.v0


@dataclass(frozen=True)
class RoundRecord:
    t: int
    policy_id: str
    is_baseline: bool
    realized_reward: float
    true_value: float
    lcb_at_play: Optional[float] = None


def _policy_id(is_baseline: bool, noncons_index: int, action: int) -> str:
    if is_baseline:
        return "baseline"
    if action >= 0:
        return f"nc{noncons_index}:a{action}"
    return f"nc{noncons_index}"


@dataclass
class RunTrace:
    """Per-round log of one run.

    ``action`` holds the arm/action index for bandits and -1 for baseline rounds
    and MDP episodes. ``lcb`` is NaN wherever no lower bound was recorded. The
    three budget arrays are ``None`` when the run had no budget ledger.
    """

    is_baseline: np.ndarray
    action: np.ndarray
    realized_reward: np.ndarray
    true_value: np.ndarray
    lcb: np.ndarray
    v_star: float
    baseline: BaselineSpec
    seed: int = 0
    budget_accumulated: Optional[np.ndarray] = None
    deficit_sum: Optional[np.ndarray] = None
    deficit_max: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.is_baseline = np.asarray(self.is_baseline, dtype=bool)
        n = len(self.is_baseline)
        self.action = np.asarray(self.action, dtype=np.int64)
        self.realized_reward = np.asarray(self.realized_reward, dtype=float)
        self.true_value = np.asarray(self.true_value, dtype=float)
        self.lcb = np.asarray(self.lcb, dtype=float)
        for name in ("action", "realized_reward", "true_value", "lcb"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if n and self.v_star < self.true_value.max() - SLACK_TOL:
            raise ValueError("v_star must dominate every played policy's value")

    def __len__(self) -> int:
        return len(self.is_baseline)

    @classmethod
    def from_records(cls, records: Sequence[RoundRecord], v_star: float,
                     baseline: BaselineSpec, seed: int = 0) -> "RunTrace":
        for i, r in enumerate(records, start=1):
            if r.t != i:
                raise ValueError(f"records must be indexed 1..T without gaps; got t={r.t} at position {i}")
            if r.is_baseline and r.true_value != baseline.v0:
                raise ValueError(f"baseline round {r.t} must carry true_value = v0")
        return cls(
            is_baseline=[r.is_baseline for r in records],
            action=[-1] * len(records),
            realized_reward=[r.realized_reward for r in records],
            true_value=[r.true_value for r in records],
            lcb=[np.nan if r.lcb_at_play is None else r.lcb_at_play for r in records],
            v_star=v_star, baseline=baseline, seed=seed,
        )

    @property
    def noncons_index(self) -> np.ndarray:
        """t' of each round (count of non-conservative plays up to and including it)."""
        return np.cumsum(~self.is_baseline)

    def policy_ids(self) -> list[str]:
        k = self.noncons_index
        return [_policy_id(b, int(i), int(a)) for b, i, a in zip(self.is_baseline, k, self.action)]

    def record(self, t: int) -> RoundRecord:
        if not 1 <= t <= len(self):
            raise IndexError(f"round {t} outside 1..{len(self)}")
        i = t - 1
        lcb = float(self.lcb[i])
        b = bool(self.is_baseline[i])
        return RoundRecord(
            t=t,
            policy_id=_policy_id(b, int(self.noncons_index[i]), int(self.action[i])),
            is_baseline=b,
            realized_reward=float(self.realized_reward[i]),
            true_value=float(self.true_value[i]),
            lcb_at_play=None if np.isnan(lcb) else lcb,
        )

    @property
    def records(self) -> Iterator[RoundRecord]:
        return (self.record(t) for t in range(1, len(self) + 1))

    @property
    def n_baseline(self) -> int:
        return int(self.is_baseline.sum())


def _check_round(trace: RunTrace, t: int) -> None:
    if not 0 <= t <= len(trace):
        raise IndexError(f"round {t} outside 0..{len(trace)}")


def regret_curve(trace: RunTrace) -> np.ndarray:
    """Cumulative regret after each round."""
    return np.cumsum(trace.v_star - trace.true_value)


def slack_curve(trace: RunTrace) -> np.ndarray:
    """Constraint slack after each round; negative means the constraint is violated."""
    t = np.arange(1, len(trace) + 1)
    return np.cumsum(trace.true_value) - trace.baseline.floor * t


def cumulative_regret(trace: RunTrace, t: int) -> float:
    _check_round(trace, t)
    if t == 0:
        return 0.0
    return float(np.sum(trace.v_star - trace.true_value[:t]))


def constraint_slack(trace: RunTrace, t: int) -> float:
    _check_round(trace, t)
    if t == 0:
        return 0.0
    return float(np.sum(trace.true_value[:t]) - trace.baseline.floor * t)


def constraint_violations(trace: RunTrace, tol: float = SLACK_TOL) -> list[int]:
    """Rounds (1-based) at which the cumulative value falls below (1 - alpha) t v0."""
    return [int(i) + 1 for i in np.flatnonzero(slack_curve(trace) < -tol)]
