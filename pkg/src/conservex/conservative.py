"""Budget calculus and the two conservative meta-algorithms.

BudgetFirst pre-funds a fixed budget with T0 baseline rounds and then hands
control to the base agent. LCBCE keeps a proxy budget built from the agent's
lower confidence bounds and plays the agent's proposal only when the baseline
rounds so far have already paid for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .agents import Agent, ConfidencePolicy, LinUcbState, LsviUcbState, UcbState, UcbviState, UniformAgent
from .core import BaselineSpec, RunTrace
from .environments import (LinearBanditInstance, LowRankMdpInstance, MabInstance, TabularMdpInstance,
                           draw_noise, optimal_value, pull, run_episode, true_policy_value)

BASELINE = "baseline"
DELEGATE = "delegate"
PLAY = "play"
METAS = ("none", "budget_first", "lcbce")
MODES = ("stale", "fresh")
_META_CODE = {"none": 0, "budget_first": 1, "lcbce": 2}


class InfeasibleBaselineError(ValueError):
    """alpha * v0 = 0: baseline rounds never earn any budget."""


class ConfigError(ValueError):
    pass


@dataclass
class BudgetState:
    alpha: float
    v0: float
    n0: int = 0
    noncons_count: int = 0
    deficit_sum: float = 0.0
    deficit_max: float = 0.0
    lambda_cache: list = field(default_factory=list)

    @property
    def accumulated(self) -> float:
        # recomputed from n0 rather than summed, so it cannot drift
        return self.alpha * self.v0 * self.n0


def budget(values: Sequence[float], baseline: BaselineSpec) -> float:
    """Worst prefix deficit sum of (1 - alpha) v0 - V over an ordered episode set (0 if empty)."""
    return kernels.budget_prefix_max(np.ascontiguousarray(values, dtype=float), baseline.floor)


def proxy_budget(lambdas: Sequence[float], baseline: BaselineSpec) -> float:
    """``budget`` with lower confidence bounds in place of true values."""
    return kernels.budget_prefix_max(np.ascontiguousarray(lambdas, dtype=float), baseline.floor)


def _ceil(x: float) -> int:
    n = math.ceil(x)
    # 10 / 0.1 style round-off must not add a whole round
    if n - x > 1.0 - 1e-9 * max(1.0, abs(x)):
        n -= 1
    return int(n)


def budget_first_schedule(C: float, baseline: BaselineSpec) -> tuple[float, int]:
    """Budget B = C^2 / (alpha v0 + delta0) and the baseline prefix length T0 = ceil(B / (alpha v0))."""
    if baseline.delta0 is None:
        raise ConfigError("BudgetFirst needs the baseline gap delta0; use LCBCE when it is unknown")
    per_round = baseline.alpha * baseline.v0
    if per_round <= 0.0:
        raise InfeasibleBaselineError("baseline earns no budget (alpha * v0 = 0)")
    B = C * C / (per_round + baseline.delta0)
    return B, _ceil(B / per_round)


def budget_first_decide(t: int, T0: int) -> str:
    return BASELINE if t <= T0 else DELEGATE


def lcbce_decide(state: BudgetState, candidate: ConfidencePolicy, baseline: BaselineSpec,
                 mode: str = "stale", fresh_lambdas: Optional[Sequence[float]] = None) -> str:
    """Play the candidate iff the proxy budget including it is covered by alpha v0 n0.

    ``stale`` reuses each played policy's lambda from the round it was played;
    ``fresh`` takes ``fresh_lambdas`` (one per past play, recomputed on current
    data). ``state`` is updated in place.
    """
    lam = float(candidate.lcb_value)
    if not math.isfinite(lam):
        raise ValueError("candidate lcb_value must be finite")
    floor = baseline.floor
    if mode == "stale":
        dc = state.deficit_sum + floor - lam
        new_max = dc if state.noncons_count == 0 else max(state.deficit_max, dc)
    elif mode == "fresh":
        if fresh_lambdas is None or len(fresh_lambdas) != state.noncons_count:
            raise ValueError("fresh mode needs one recomputed lambda per past non-conservative play")
        lams = np.append(np.asarray(fresh_lambdas, dtype=float), lam)
        dc = float(np.sum(floor - lams))
        new_max = kernels.budget_prefix_max(lams, floor)
    else:
        raise ValueError(f"mode must be one of {MODES}")
    if new_max <= state.accumulated:
        state.noncons_count += 1
        state.deficit_sum = dc
        state.deficit_max = new_max
        state.lambda_cache.append(lam)
        return PLAY
    state.n0 += 1
    return BASELINE


# --- run loop -------------------------------------------------------------------

def _fused_kind(env, agent) -> Optional[str]:
    if isinstance(env, MabInstance):
        if type(agent) is UcbState and agent.K == env.K and agent.counts.sum() == 0:
            return "mab"
        if type(agent) is UniformAgent and agent.n == env.K and agent.first == 1:
            return "mab_uniform"
    if (isinstance(env, LinearBanditInstance) and type(agent) is LinUcbState and agent.n_updates == 0
            and agent.radius is None):
        if agent.actions is None or np.array_equal(agent.actions, env.actions):
            return "linear"
    if isinstance(env, (TabularMdpInstance, LowRankMdpInstance)):
        tab = env.to_tabular()
        if (type(agent) is UcbviState and agent.n_episodes == 0 and agent.s1 == tab.s1
                and (agent.H, agent.S, agent.A) == (tab.H, tab.S, tab.A) and agent.r_max == tab.r_max):
            return "tabular"
        if (isinstance(env, LowRankMdpInstance) and type(agent) is LsviUcbState and agent.n_episodes == 0
                and agent.s1 == env.s1 and agent.H == env.H and np.array_equal(agent.phi, env.phi)):
            return "lowrank"
    return None


def _run_fused(kind, env, agent, meta, baseline, T, seed, T0):
    rng = np.random.default_rng(seed)
    code = _META_CODE[meta]
    a, v0 = baseline.alpha, baseline.v0
    fast = kernels.fast
    if kind in ("mab", "mab_uniform"):
        noise = draw_noise(env.noise, rng, T)
        choices = agent.rng.integers(env.K, size=T) if kind == "mab_uniform" else None
        out = fast.run_mab(env.means, agent.delta if kind == "mab" else 0.5, a, v0, code, T0, noise, T, choices)
        if kind == "mab":
            agent.counts[:] = out[8]
            agent.sums[:] = out[9]
    elif kind == "linear":
        noise = draw_noise(env.noise, rng, T)
        out = fast.run_linear(env.actions, env.rewards, agent.delta, agent.lam_reg, agent.B_norm,
                              agent.D_norm, a, v0, code, T0, noise, T)
        agent.actions = np.asarray(env.actions, dtype=float)
        agent.gram_inv[:] = out[8]
        agent.moment[:] = out[9]
        agent.theta_hat = agent.gram_inv @ agent.moment
        agent.n_updates = int((out[0] == 0).sum())
        agent.gram = agent.lam_reg * np.eye(agent.d) + np.einsum(
            "ai,aj->ij", env.actions[out[1][out[0] == 0]], env.actions[out[1][out[0] == 0]])
    elif kind == "tabular":
        tab = env.to_tabular()
        u = rng.random((T, tab.H, 2))
        out = fast.run_tabular(tab.P, tab.R, tab.cumulative_P, tab.s1, tab.r_max, tab.reward_noise == "bernoulli",
                               agent.delta, agent.horizon, agent.bernstein, a, v0, code, T0, u, T)
        agent.N[:], agent.next_counts[:], agent.reward_sums[:] = out[8], out[9], out[10]
        n = np.maximum(agent.N, 1)
        agent.r_hat = np.where(agent.N > 0, agent.reward_sums / n, 0.0)
        agent.p_hat = agent.next_counts / n[..., None]
        agent.n_episodes = int((out[0] == 0).sum())
        agent._planned = False
    else:
        tab = env.to_tabular()
        u = rng.random((T, tab.H, 2))
        out = fast.run_lowrank(env.phi, tab.P, tab.R, tab.cumulative_P, tab.s1, tab.reward_noise == "bernoulli",
                               agent.beta, agent.lam_reg, a, v0, code, T0, u, T)
        agent.Lambda_inv[:], agent.b[:], agent.M[:] = out[8], out[9], out[10]
        agent.Lambda = np.linalg.inv(agent.Lambda_inv)
        agent.n_episodes = int((out[0] == 0).sum())
        agent._plan = None
    return out[:8]


def _policy_key(policy):
    return policy if isinstance(policy, (int, np.integer)) else np.asarray(policy).tobytes()


def _run_python(env, agent, meta, baseline, T, seed, T0, mode):
    rng = np.random.default_rng(seed)
    is_mdp = isinstance(env, (TabularMdpInstance, LowRankMdpInstance))
    state = BudgetState(baseline.alpha, baseline.v0)
    is_base = np.zeros(T, dtype=np.uint8)
    action = np.full(T, -1, dtype=np.int64)
    realized = np.zeros(T)
    value = np.zeros(T)
    lcb = np.full(T, np.nan)
    acc = np.zeros(T)
    dsum = np.zeros(T)
    dmax = np.zeros(T)
    played: list = []
    n0 = 0
    value_cache: dict = {}
    for i in range(T):
        t = i + 1
        play = True
        cand = None
        if meta == "budget_first" and budget_first_decide(t, T0) == BASELINE:
            play = False
        else:
            cand = agent.propose()
            if meta == "lcbce":
                fresh = None
                if mode == "fresh":
                    cache: dict = {}
                    fresh = []
                    for p in played:
                        key = _policy_key(p)
                        if key not in cache:
                            cache[key] = agent.lower_bound(p)
                        fresh.append(cache[key])
                play = lcbce_decide(state, cand, baseline, mode, fresh) == PLAY
        if play:
            pol = cand.policy
            if is_mdp:
                traj = run_episode(env, pol, rng)
                obs = traj
                realized[i] = traj.total
                key = _policy_key(pol)
                if key not in value_cache:
                    value_cache = {key: true_policy_value(env, pol)}
                value[i] = value_cache[key]
            else:
                obs = pull(env, int(pol), rng)
                realized[i] = obs
                value[i] = true_policy_value(env, int(pol))
                action[i] = int(pol)
            lcb[i] = cand.lcb_value
            agent.update(pol, obs)
            played.append(pol)
        else:
            n0 += 1
            is_base[i] = 1
            realized[i] = baseline.v0
            value[i] = baseline.v0
        acc[i] = baseline.alpha * baseline.v0 * n0
        dsum[i] = state.deficit_sum
        dmax[i] = state.deficit_max
    return is_base, action, realized, value, lcb, acc, dsum, dmax


def run_conservative(env, agent: Agent, meta: str, baseline: BaselineSpec, T: int, seed: int = 0, *,
                     C: Optional[float] = None, mode: str = "stale", backend: str = "auto") -> RunTrace:
    """Run ``agent`` on ``env`` for T rounds under a meta-algorithm.

    ``backend="auto"`` uses the compiled fused loop when the extension is built,
    the mode is ``stale`` and the (env, agent) pair has one; ``"python"`` always
    runs the object loop. Either way the agent object ends holding the run's
    statistics (the LSVI replay buffer is only filled by the Python loop).
    """
    if meta not in METAS:
        raise ConfigError(f"meta must be one of {METAS}, got {meta!r}")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if T < 1:
        raise ConfigError("horizon T must be at least 1")
    T0 = 0
    if meta == "budget_first":
        if C is None:
            raise ConfigError("BudgetFirst needs the rate constant C")
        T0 = budget_first_schedule(C, baseline)[1]
    if isinstance(agent, LinUcbState) and agent.actions is None and isinstance(env, LinearBanditInstance):
        agent.actions = np.asarray(env.actions, dtype=float)

    kind = _fused_kind(env, agent) if (kernels.FUSED and mode == "stale") else None
    if backend == "native" and kind is None:
        raise ConfigError("no compiled loop for this environment/agent/mode combination")
    if backend == "python" or kind is None:
        out = _run_python(env, agent, meta, baseline, T, seed, T0, mode)
        used = "python"
    else:
        out = _run_fused(kind, env, agent, meta, baseline, T, seed, T0)
        used = "native"
    is_base, action, realized, value, lcb, acc, dsum, dmax = out
    return RunTrace(
        is_baseline=is_base.astype(bool), action=action, realized_reward=realized, true_value=value, lcb=lcb,
        v_star=max(optimal_value(env), baseline.v0), baseline=baseline, seed=seed,
        budget_accumulated=None if meta == "none" else acc,
        deficit_sum=dsum if meta == "lcbce" else None,
        deficit_max=dmax if meta == "lcbce" else None,
        meta={"meta": meta, "mode": mode, "T0": T0, "backend": used},
    )
