"""Experiment configuration: a single JSON document, validated with field paths."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..agents import (LinUcbState, LsviUcbState, OracleLcbAgent, UcbState, UcbviState, UniformAgent,
                      ZeroLcbAgent)
from ..core import BaselineSpec
from ..environments import (Instance, LinearBanditInstance, LowRankMdpInstance, MabInstance,
                            instance_from_dict, instance_to_dict, load_instance,
                            optimal_value, true_policy_value)

AGENT_TYPES = ("ucb", "linucb", "ucbvi", "lsvi_ucb", "uniform")
DEFAULT_AGENT = {"mab": "ucb", "linear_bandit": "linucb", "tabular": "ucbvi", "low_rank": "lsvi_ucb"}
AGENT_DEFAULTS = {"delta": 0.1, "lam_reg": 1.0, "bonus_mode": "bernstein", "c_beta": 1.0, "beta": None,
                  "lcb": "own"}


class ConfigLoadError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def setting_of(env: Instance) -> str:
    if isinstance(env, MabInstance):
        return "mab"
    if isinstance(env, LinearBanditInstance):
        return "linear_bandit"
    if isinstance(env, LowRankMdpInstance):
        return "low_rank"
    return "tabular"


def rate_constant(env: Instance) -> float:
    """Base-algorithm regret coefficient C: sqrt(A), d, sqrt(H^3 S A) or sqrt(d^3 H^4)."""
    if isinstance(env, MabInstance):
        return float(np.sqrt(env.K))
    if isinstance(env, LinearBanditInstance):
        return float(env.d)
    if isinstance(env, LowRankMdpInstance):
        return float(np.sqrt(env.d ** 3 * env.H ** 4))
    return float(np.sqrt(env.H ** 3 * env.S * env.A))


def _num(d: dict, key: str, path: str, lo=None, hi=None, open_lo=False, open_hi=False, allow=()):
    v = d[key]
    if v in allow:
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigLoadError(f"{path}.{key}", f"expected a number, got {v!r}")
    if lo is not None and (v < lo or (open_lo and v == lo)):
        raise ConfigLoadError(f"{path}.{key}", f"must be {'>' if open_lo else '>='} {lo}, got {v}")
    if hi is not None and (v > hi or (open_hi and v == hi)):
        raise ConfigLoadError(f"{path}.{key}", f"must be {'<' if open_hi else '<='} {hi}, got {v}")
    return v


@dataclass
class ExperimentConfig:
    environment: dict
    agent: dict
    meta: dict
    baseline: dict
    horizon: int
    seeds: list
    output_dir: Optional[str] = None
    max_violation_fraction: Optional[float] = None
    base_dir: str = "."

    # --- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".") -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigLoadError("<root>", "config must be a JSON object")
        for key in ("environment", "horizon", "baseline"):
            if key not in raw:
                raise ConfigLoadError(key, "missing required field")
        env = raw["environment"]
        if not isinstance(env, dict):
            raise ConfigLoadError("environment", "expected an object")
        if "file" in env:
            p = Path(base_dir) / env["file"]
            if not p.exists():
                raise ConfigLoadError("environment.file", f"no such file {str(p)!r}")
        elif env.get("type") not in DEFAULT_AGENT:
            raise ConfigLoadError("environment.type", f"expected one of {sorted(DEFAULT_AGENT)}, got {env.get('type')!r}")

        horizon = raw["horizon"]
        if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1:
            raise ConfigLoadError("horizon", f"must be an integer >= 1, got {horizon!r}")

        agent = {**AGENT_DEFAULTS, **raw.get("agent", {})}
        if agent.get("type") is not None and agent["type"] not in AGENT_TYPES:
            raise ConfigLoadError("agent.type", f"expected one of {AGENT_TYPES}, got {agent['type']!r}")
        _num(agent, "delta", "agent", 0, 1, open_lo=True, open_hi=True)
        _num(agent, "lam_reg", "agent", 0, open_lo=True)
        _num(agent, "c_beta", "agent", 0, open_lo=True)
        if agent["beta"] is not None:
            _num(agent, "beta", "agent", 0)
        if agent["bonus_mode"] not in ("bernstein", "hoeffding"):
            raise ConfigLoadError("agent.bonus_mode", f"expected 'bernstein' or 'hoeffding', got {agent['bonus_mode']!r}")
        if agent["lcb"] not in ("own", "zero", "oracle"):
            raise ConfigLoadError("agent.lcb", f"expected 'own', 'zero' or 'oracle', got {agent['lcb']!r}")

        meta = {"type": "none", **raw.get("meta", {})}
        if meta["type"] not in ("none", "budget_first", "lcbce"):
            raise ConfigLoadError("meta.type", f"expected 'none', 'budget_first' or 'lcbce', got {meta['type']!r}")
        meta.setdefault("mode", "stale")
        if meta["mode"] not in ("stale", "fresh"):
            raise ConfigLoadError("meta.mode", f"expected 'stale' or 'fresh', got {meta['mode']!r}")
        if meta["type"] == "budget_first":
            meta.setdefault("C", "auto")
            _num(meta, "C", "meta", 0, allow=("auto",))

        baseline = {"v0": "auto", "delta0": None, **raw["baseline"]}
        if "alpha" not in baseline:
            raise ConfigLoadError("baseline.alpha", "missing required field")
        _num(baseline, "alpha", "baseline", 0, 1)
        _num(baseline, "v0", "baseline", 0, allow=("auto",))
        if baseline["delta0"] is not None:
            _num(baseline, "delta0", "baseline", 0, allow=("auto",))

        seeds = raw.get("seeds", {"base": 0, "count": 1})
        if isinstance(seeds, dict):
            base, count = seeds.get("base", 0), seeds.get("count", 1)
            if not isinstance(count, int) or count < 1:
                raise ConfigLoadError("seeds.count", f"must be an integer >= 1, got {count!r}")
            seeds = list(range(base, base + count))
        if not isinstance(seeds, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
            raise ConfigLoadError("seeds", "expected a list of integers or {base, count}")
        if any(s < 0 for s in seeds):
            raise ConfigLoadError("seeds", "seeds must be nonnegative")
        if len(set(seeds)) != len(seeds):
            raise ConfigLoadError("seeds", "seeds must be distinct")

        mvf = raw.get("max_violation_fraction")
        if mvf is not None:
            _num(raw, "max_violation_fraction", "<root>", 0, 1)
        return cls(environment=copy.deepcopy(env), agent=agent, meta=meta, baseline=baseline,
                   horizon=horizon, seeds=seeds, output_dir=raw.get("output_dir"),
                   max_violation_fraction=mvf, base_dir=str(base_dir))

    def replace(self, **changes) -> "ExperimentConfig":
        new = copy.deepcopy(self)
        for k, v in changes.items():
            setattr(new, k, v)
        return new

    # --- resolution ---------------------------------------------------------

    def build_environment(self) -> Instance:
        if "file" in self.environment:
            return load_instance(Path(self.base_dir) / self.environment["file"])
        try:
            return instance_from_dict(self.environment)
        except (TypeError, ValueError) as exc:
            raise ConfigLoadError("environment", str(exc)) from exc

    def build_baseline(self, env: Instance) -> BaselineSpec:
        v0 = self.baseline["v0"]
        if v0 == "auto":
            v0 = getattr(env, "baseline_value", None)
            if v0 is None:
                raise ConfigLoadError("baseline.v0", "environment carries no baseline value; give v0 explicitly")
        delta0 = self.baseline["delta0"]
        if delta0 == "auto":
            delta0 = max(0.0, optimal_value(env) - v0)
        return BaselineSpec(alpha=float(self.baseline["alpha"]), v0=float(v0),
                            delta0=None if delta0 is None else float(delta0))

    def agent_type(self, env: Instance) -> str:
        return self.agent.get("type") or DEFAULT_AGENT[setting_of(env)]

    def build_agent(self, env: Instance, seed: int):
        a = self.agent
        kind = self.agent_type(env)
        if kind == "ucb":
            agent = UcbState(env.K, delta=a["delta"])
        elif kind == "linucb":
            agent = LinUcbState(env.d, delta=a["delta"], lam_reg=a["lam_reg"], B_norm=env.B_norm,
                                D_norm=env.D_norm, actions=env.actions)
        elif kind == "ucbvi":
            tab = env.to_tabular()
            agent = UcbviState(tab.S, tab.A, tab.H, delta=a["delta"], horizon=self.horizon, r_max=tab.r_max,
                               bonus_mode=a["bonus_mode"], s1=tab.s1)
        elif kind == "lsvi_ucb":
            if not isinstance(env, LowRankMdpInstance):
                raise ConfigLoadError("agent.type", "lsvi_ucb needs a low_rank environment")
            agent = LsviUcbState(env.phi, env.H, delta=a["delta"], horizon=self.horizon, lam_reg=a["lam_reg"],
                                 c_beta=a["c_beta"], beta=a["beta"], s1=env.s1)
        else:
            if isinstance(env, MabInstance):
                n, first = env.K, 1
            elif isinstance(env, LinearBanditInstance):
                n, first = env.n_actions, 0
            else:
                raise ConfigLoadError("agent.type", "the uniform control agent is defined for bandits only")
            agent = UniformAgent(n, np.random.default_rng((seed, 1)), first=first)
        if a["lcb"] == "zero":
            agent = ZeroLcbAgent(agent)
        elif a["lcb"] == "oracle":
            agent = OracleLcbAgent(agent, lambda p: true_policy_value(env, p))
        return agent

    def meta_constant(self, env: Instance) -> Optional[float]:
        if self.meta["type"] != "budget_first":
            return None
        C = self.meta["C"]
        return rate_constant(env) if C == "auto" else float(C)

    def violation_threshold(self) -> float:
        if self.max_violation_fraction is not None:
            return float(self.max_violation_fraction)
        return float(self.agent["delta"])

    def resolved(self) -> dict:
        """Self-describing record: every default filled in, environment inlined."""
        env = self.build_environment()
        base = self.build_baseline(env)
        meta = dict(self.meta)
        if meta["type"] == "budget_first":
            meta["C"] = self.meta_constant(env)
        return {
            "environment": instance_to_dict(env),
            "agent": {**self.agent, "type": self.agent_type(env)},
            "meta": meta,
            "baseline": {"alpha": base.alpha, "v0": base.v0, "delta0": base.delta0},
            "horizon": self.horizon,
            "seeds": list(self.seeds),
            "max_violation_fraction": self.violation_threshold(),
        }


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigLoadError("<file>", f"no such config {str(path)!r}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigLoadError("<file>", f"invalid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(raw, base_dir=str(path.parent))
