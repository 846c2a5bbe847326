"""Ground-truth simulators for the four problem families.

Every instance is immutable and exposes an exact value oracle. Randomness is
always injected as a ``numpy.random.Generator``; the consumption pattern is part
of the contract (the compiled run loops pre-draw the same streams):

* bandit pull: one noise draw per pull (none for the zero-noise model);
* MDP episode: one ``rng.random((H, 2))`` block, column 0 drives the reward,
  column 1 the transition (inverse-CDF on the cumulative transition row);
* baseline rounds consume nothing.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from .core import BaselineSpec

NOISE_MODELS = ("gaussian", "uniform", "none")
REWARD_MODELS = ("bernoulli", "none")
PROB_TOL = 1e-12


class PolicyError(RuntimeError):
    """A policy was asked for an action at a state where it is undefined."""


def draw_noise(model: str, rng: np.random.Generator, size=None):
    if model == "gaussian":
        return rng.standard_normal(size)
    if model == "uniform":
        return rng.uniform(-1.0, 1.0, size)
    if model == "none":
        return 0.0 if size is None else np.zeros(size)
    raise ValueError(f"unknown noise model {model!r}; expected one of {NOISE_MODELS}")


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MabInstance:
    """Arms 1..K with means ``means``; arm 0 pays ``baseline_mean`` deterministically."""

    means: np.ndarray
    baseline_mean: float
    noise: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means))
        if self.means.ndim != 1 or len(self.means) < 1:
            raise ValueError("MAB needs at least one non-baseline arm")
        if np.any(self.means < 0) or np.any(self.means > 1):
            raise ValueError("arm means must lie in [0, 1]")
        if not 0.0 <= self.baseline_mean <= 1.0:
            raise ValueError("baseline_mean must lie in [0, 1]")
        if self.noise not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {self.noise!r}")

    @property
    def K(self) -> int:
        return len(self.means)

    @property
    def baseline_value(self) -> float:
        return float(self.baseline_mean)

    def arm_mean(self, arm: int) -> float:
        if not 0 <= arm <= self.K:
            raise ValueError(f"arm {arm} outside 0..{self.K}")
        return float(self.baseline_mean) if arm == 0 else float(self.means[arm - 1])


@dataclass(frozen=True, eq=False)
class LinearBanditInstance:
    """Finite action set with features ``actions[a]`` and mean reward <theta_star, phi_a>."""

    theta_star: np.ndarray
    actions: np.ndarray
    baseline_action_reward: float
    noise: str = "gaussian"
    B_norm: float = 1.0
    D_norm: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta_star", _frozen(self.theta_star))
        object.__setattr__(self, "actions", _frozen(np.atleast_2d(self.actions)))
        if self.actions.shape[1] != len(self.theta_star):
            raise ValueError("action features and theta_star disagree on dimension")
        if np.linalg.norm(self.theta_star) > self.B_norm + 1e-9:
            raise ValueError("||theta_star|| exceeds B_norm")
        if np.any(np.linalg.norm(self.actions, axis=1) > self.D_norm + 1e-9):
            raise ValueError("an action feature exceeds D_norm")
        r = self.rewards
        if np.any(r < -1e-12) or np.any(r > 1 + 1e-12):
            raise ValueError("expected rewards must lie in [0, 1]")
        if self.noise not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {self.noise!r}")

    @property
    def d(self) -> int:
        return len(self.theta_star)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def rewards(self) -> np.ndarray:
        return self.actions @ self.theta_star

    @property
    def baseline_value(self) -> float:
        return float(self.baseline_action_reward)


@dataclass(frozen=True, eq=False)
class TabularMdpInstance:
    """Episodic time-inhomogeneous MDP: ``P[h, s, a, s']`` and mean rewards ``R[h, s, a]``."""

    P: np.ndarray
    R: np.ndarray
    s1: int = 0
    r_max: float = 1.0
    reward_noise: str = "bernoulli"
    baseline_value: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "P", _frozen(self.P))
        object.__setattr__(self, "R", _frozen(self.R))
        H, S, A, S2 = self.P.shape
        if S2 != S or self.R.shape != (H, S, A):
            raise ValueError(f"shape mismatch: P {self.P.shape}, R {self.R.shape}")
        if np.any(self.P < -PROB_TOL) or np.any(np.abs(self.P.sum(-1) - 1) > PROB_TOL):
            raise ValueError("each P[h, s, a] must be a distribution within 1e-12")
        if np.any(self.R < 0) or np.any(self.R > self.r_max):
            raise ValueError("mean rewards must lie in [0, r_max]")
        if not 0 <= self.s1 < S:
            raise ValueError("initial state out of range")
        if self.reward_noise not in REWARD_MODELS:
            raise ValueError(f"unknown reward model {self.reward_noise!r}")
        cum = np.cumsum(np.clip(self.P, 0.0, None), axis=-1)
        object.__setattr__(self, "_cum", _frozen(cum))

    @property
    def H(self) -> int:
        return self.P.shape[0]

    @property
    def S(self) -> int:
        return self.P.shape[1]

    @property
    def A(self) -> int:
        return self.P.shape[2]

    @property
    def cumulative_P(self) -> np.ndarray:
        return self._cum

    def to_tabular(self) -> "TabularMdpInstance":
        return self


@dataclass(frozen=True, eq=False)
class LowRankMdpInstance:
    """Linear MDP over a finite state set: P_h(.|s,a) = phi(s,a) . mu_h, r_h(s,a) = phi(s,a) . theta_h.

    Shapes: ``phi`` (S, A, d), ``mu`` (H, d, S), ``theta`` (H, d).
    """

    phi: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    s1: int = 0
    reward_noise: str = "bernoulli"
    baseline_value: Optional[float] = None
    r_max: float = field(default=1.0, init=False)

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen(self.phi))
        object.__setattr__(self, "mu", _frozen(self.mu))
        object.__setattr__(self, "theta", _frozen(self.theta))
        S, A, d = self.phi.shape
        H = self.mu.shape[0]
        if self.mu.shape != (H, d, S) or self.theta.shape != (H, d):
            raise ValueError(f"shape mismatch: phi {self.phi.shape}, mu {self.mu.shape}, theta {self.theta.shape}")
        if np.any(np.linalg.norm(self.phi, axis=-1) > 1 + 1e-9):
            raise ValueError("||phi(s, a)|| must be at most 1")
        root_d = np.sqrt(d) + 1e-9
        if np.any(np.linalg.norm(self.mu.sum(-1), axis=-1) > root_d) or np.any(np.linalg.norm(self.theta, axis=-1) > root_d):
            raise ValueError("||mu_h(S)|| and ||theta_h|| must be at most sqrt(d)")
        if self.reward_noise not in REWARD_MODELS:
            raise ValueError(f"unknown reward model {self.reward_noise!r}")
        # validates the induced tables as well
        object.__setattr__(self, "_tabular", TabularMdpInstance(
            P=self.induced_P(), R=self.induced_R(), s1=self.s1,
            reward_noise=self.reward_noise, baseline_value=self.baseline_value))

    @property
    def H(self) -> int:
        return self.mu.shape[0]

    @property
    def S(self) -> int:
        return self.phi.shape[0]

    @property
    def A(self) -> int:
        return self.phi.shape[1]

    @property
    def d(self) -> int:
        return self.phi.shape[2]

    def induced_P(self) -> np.ndarray:
        P = np.einsum("sad,hdt->hsat", self.phi, self.mu)
        # signed measures may leave -1e-17 style residue
        return np.where(np.abs(P) < PROB_TOL, 0.0, P)

    def induced_R(self) -> np.ndarray:
        R = np.einsum("sad,hd->hsa", self.phi, self.theta)
        return np.clip(R, 0.0, 1.0) if np.all((R > -1e-12) & (R < 1 + 1e-12)) else R

    def to_tabular(self) -> TabularMdpInstance:
        return self._tabular

    @property
    def cumulative_P(self) -> np.ndarray:
        return self._tabular.cumulative_P


Instance = Union[MabInstance, LinearBanditInstance, TabularMdpInstance, LowRankMdpInstance]
MdpInstance = Union[TabularMdpInstance, LowRankMdpInstance]


# --- sampling ---------------------------------------------------------------

def pull(instance: Union[MabInstance, LinearBanditInstance], arm: int, rng: np.random.Generator) -> float:
    """Realized reward of one pull. For a MAB, arm 0 is the deterministic baseline arm."""
    if isinstance(instance, MabInstance):
        if not 0 <= arm <= instance.K:
            raise ValueError(f"arm {arm} outside 0..{instance.K}")
        if arm == 0:
            return float(instance.baseline_mean)
        return float(instance.means[arm - 1] + draw_noise(instance.noise, rng))
    if isinstance(instance, LinearBanditInstance):
        if not 0 <= arm < instance.n_actions:
            raise ValueError(f"action {arm} outside 0..{instance.n_actions - 1}")
        return float(instance.rewards[arm] + draw_noise(instance.noise, rng))
    raise TypeError(f"pull is defined for bandit instances, not {type(instance).__name__}")


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray   # (H + 1,), last entry is the terminal state
    actions: np.ndarray  # (H,)
    rewards: np.ndarray  # (H,)

    @property
    def total(self) -> float:
        return float(self.rewards.sum())


def run_episode(instance: MdpInstance, policy: np.ndarray, rng: np.random.Generator) -> Trajectory:
    """Roll out a deterministic stage-indexed policy ``policy[h, s]`` for H steps.

    Entries of -1 mark states where the policy is undefined.
    """
    tab = instance.to_tabular()
    policy = np.asarray(policy)
    H = tab.H
    u = rng.random((H, 2))
    states = np.empty(H + 1, dtype=np.int64)
    actions = np.empty(H, dtype=np.int64)
    rewards = np.empty(H)
    s = tab.s1
    for h in range(H):
        states[h] = s
        a = int(policy[h, s])
        if not 0 <= a < tab.A:
            raise PolicyError(f"policy undefined at stage {h + 1}, state {s}")
        actions[h] = a
        mean = tab.R[h, s, a]
        if tab.reward_noise == "bernoulli":
            rewards[h] = tab.r_max if u[h, 0] < mean / tab.r_max else 0.0
        else:
            rewards[h] = mean
        s = min(int(np.searchsorted(tab.cumulative_P[h, s, a], u[h, 1], side="right")), tab.S - 1)
    states[H] = s
    return Trajectory(states, actions, rewards)


def baseline_episode(instance: Instance, baseline: BaselineSpec) -> float:
    """The baseline pays v0 and ends the episode; nothing is observed."""
    return float(baseline.v0)


# --- value oracles ------------------------------------------------------------

def evaluate_policy(P: np.ndarray, R: np.ndarray, policy: np.ndarray) -> np.ndarray:
    """Exact backward-induction values V_h^pi(s), shape (H + 1, S)."""
    H, S, A, _ = P.shape
    V = np.zeros((H + 1, S))
    idx = np.arange(S)
    for h in range(H - 1, -1, -1):
        a = policy[h]
        V[h] = R[h, idx, a] + P[h, idx, a] @ V[h + 1]
    return V


def optimal_values(P: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimal V (H + 1, S) and a greedy policy (H, S), lowest-index tie-breaking."""
    H, S, A, _ = P.shape
    V = np.zeros((H + 1, S))
    pi = np.zeros((H, S), dtype=np.int64)
    for h in range(H - 1, -1, -1):
        Q = R[h] + P[h] @ V[h + 1]
        pi[h] = np.argmax(Q, axis=1)
        V[h] = Q.max(axis=1)
    return V, pi


def true_policy_value(instance: Instance, policy) -> float:
    if isinstance(instance, MabInstance):
        return instance.arm_mean(int(policy))
    if isinstance(instance, LinearBanditInstance):
        return float(instance.rewards[int(policy)])
    tab = instance.to_tabular()
    return float(evaluate_policy(tab.P, tab.R, np.asarray(policy, dtype=np.int64))[0, tab.s1])


def optimal_value(instance: Instance) -> float:
    if isinstance(instance, MabInstance):
        return float(max(instance.baseline_mean, instance.means.max()))
    if isinstance(instance, LinearBanditInstance):
        return float(max(instance.baseline_action_reward, instance.rewards.max()))
    tab = instance.to_tabular()
    return float(optimal_values(tab.P, tab.R)[0][0, tab.s1])


def enumerate_policies(instance: MdpInstance) -> Iterator[np.ndarray]:
    """All A^(S*H) deterministic stage-indexed policies."""
    tab = instance.to_tabular()
    for combo in itertools.product(range(tab.A), repeat=tab.S * tab.H):
        yield np.array(combo, dtype=np.int64).reshape(tab.H, tab.S)


def brute_force_optimal_value(instance: MdpInstance) -> float:
    return max(true_policy_value(instance, pi) for pi in enumerate_policies(instance))


# --- generators -------------------------------------------------------------

def random_mab(K: int, seed: int, baseline_mean: float = 0.5, noise: str = "gaussian") -> MabInstance:
    rng = np.random.default_rng(seed)
    return MabInstance(means=rng.uniform(0, 1, K), baseline_mean=baseline_mean, noise=noise)


def random_linear_bandit(d: int, n_actions: int, seed: int, noise: str = "gaussian",
                         baseline_quantile: float = 0.5) -> LinearBanditInstance:
    """Nonnegative unit-norm theta and features, so every mean reward lies in [0, 1]."""
    rng = np.random.default_rng(seed)
    theta = np.abs(rng.standard_normal(d))
    theta /= np.linalg.norm(theta)
    feats = np.abs(rng.standard_normal((n_actions, d)))
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    rb = float(np.quantile(feats @ theta, baseline_quantile))
    return LinearBanditInstance(theta_star=theta, actions=feats, baseline_action_reward=rb, noise=noise)


def _baseline_from_policy(P, R, s1, rng) -> float:
    H, S, A, _ = P.shape
    pi0 = rng.integers(A, size=(H, S))
    return float(evaluate_policy(P, R, pi0)[0, s1])


def random_tabular(S: int, A: int, H: int, seed: int, deterministic: bool = False,
                   reward_noise: Optional[str] = None) -> TabularMdpInstance:
    """Dirichlet(1) transitions and uniform mean rewards.

    ``deterministic=True`` gives one-hot transitions and noiseless rewards. The
    baseline value is that of a random fixed deterministic policy.
    """
    rng = np.random.default_rng(seed)
    if deterministic:
        nxt = rng.integers(S, size=(H, S, A))
        P = np.zeros((H, S, A, S))
        np.put_along_axis(P, nxt[..., None], 1.0, axis=-1)
    else:
        P = rng.dirichlet(np.ones(S), size=(H, S, A))
    R = rng.uniform(0, 1, size=(H, S, A))
    v0 = _baseline_from_policy(P, R, 0, rng)
    noise = reward_noise or ("none" if deterministic else "bernoulli")
    return TabularMdpInstance(P=P, R=R, s1=0, reward_noise=noise, baseline_value=v0)


def random_low_rank(S: int, A: int, d: int, H: int, seed: int, deterministic: bool = False,
                    reward_noise: Optional[str] = None) -> LowRankMdpInstance:
    """Simplex features mixing d latent next-state distributions.

    ``deterministic=True`` requires d = S * A: indicator features with one-hot
    latent transitions, i.e. a deterministic tabular MDP in low-rank form.
    """
    rng = np.random.default_rng(seed)
    if deterministic:
        if d != S * A:
            raise ValueError("deterministic low-rank instances use indicator features (d = S * A)")
        phi = np.eye(d).reshape(S, A, d)
        nxt = rng.integers(S, size=(H, d))
        mu = np.zeros((H, d, S))
        np.put_along_axis(mu, nxt[..., None], 1.0, axis=-1)
    else:
        phi = rng.dirichlet(np.ones(d), size=(S, A))
        mu = rng.dirichlet(np.ones(S), size=(H, d))
    theta = rng.uniform(0, 1, size=(H, d))
    P = np.einsum("sad,hdt->hsat", phi, mu)
    R = np.einsum("sad,hd->hsa", phi, theta)
    v0 = _baseline_from_policy(P, R, 0, rng)
    noise = reward_noise or ("none" if deterministic else "bernoulli")
    return LowRankMdpInstance(phi=phi, mu=mu, theta=theta, s1=0, reward_noise=noise, baseline_value=v0)


# --- instance files -----------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict:
    if isinstance(instance, MabInstance):
        return {"type": "mab", "means": instance.means.tolist(),
                "baseline_mean": instance.baseline_mean, "noise": instance.noise}
    if isinstance(instance, LinearBanditInstance):
        return {"type": "linear_bandit", "theta_star": instance.theta_star.tolist(),
                "actions": instance.actions.tolist(),
                "baseline_action_reward": instance.baseline_action_reward,
                "noise": instance.noise, "B_norm": instance.B_norm, "D_norm": instance.D_norm}
    if isinstance(instance, TabularMdpInstance):
        return {"type": "tabular", "P": instance.P.tolist(), "R": instance.R.tolist(),
                "s1": instance.s1, "r_max": instance.r_max,
                "reward_noise": instance.reward_noise, "baseline_value": instance.baseline_value}
    if isinstance(instance, LowRankMdpInstance):
        return {"type": "low_rank", "phi": instance.phi.tolist(), "mu": instance.mu.tolist(),
                "theta": instance.theta.tolist(), "s1": instance.s1,
                "reward_noise": instance.reward_noise, "baseline_value": instance.baseline_value}
    raise TypeError(type(instance).__name__)


GENERATORS = {
    "mab": random_mab,
    "linear_bandit": random_linear_bandit,
    "tabular": random_tabular,
    "low_rank": random_low_rank,
}

_CLASSES = {
    "mab": MabInstance,
    "linear_bandit": LinearBanditInstance,
    "tabular": TabularMdpInstance,
    "low_rank": LowRankMdpInstance,
}


def instance_from_dict(spec: dict) -> Instance:
    """Build an instance from an explicit table or a ``{"generate": {...}}`` request."""
    spec = dict(spec)
    kind = spec.pop("type", None)
    if kind not in _CLASSES:
        raise ValueError(f"unknown environment type {kind!r}; expected one of {sorted(_CLASSES)}")
    if "generate" in spec:
        return GENERATORS[kind](**spec["generate"])
    return _CLASSES[kind](**spec)


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n", encoding="utf-8")


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
