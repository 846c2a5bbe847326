"""Acceptance criteria as runnable checks.

Each ``criterion_N`` returns a :class:`CriterionResult`; ``run_all`` runs a
selection and prints one line per criterion. Runs shared by criteria 2 and 6
are cached for the lifetime of the process.
"""
from __future__ import annotations

import filecmp
import functools
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conservative import budget, budget_first_schedule
from .core import BaselineSpec, constraint_violations
from .environments import (brute_force_optimal_value, enumerate_policies, evaluate_policy, optimal_value,
                           optimal_values, random_low_rank, random_tabular, true_policy_value)
from .harness import (ExperimentConfig, alpha_sweep, is_nonincreasing, rate_constant, recount_violations,
                      run_csv_name, run_experiment, run_many, run_seed, scaling_probe)

DELTA = 0.1
MAB_ENV = {"type": "mab", "means": [0.8, 0.78, 0.74, 0.68], "baseline_mean": 0.5, "noise": "gaussian"}
LINEAR_ENV = {"type": "linear_bandit", "generate": {"d": 5, "n_actions": 20, "seed": 0}}
TABULAR_ENV = {"type": "tabular", "generate": {"S": 5, "A": 3, "H": 4, "seed": 0}}
LOW_RANK_ENV = {"type": "low_rank", "generate": {"S": 8, "A": 3, "d": 6, "H": 3, "seed": 0}}
SEEDS_200 = {"base": 0, "count": 200}


def make_config(env: dict, horizon: int, alpha: float = 0.1, meta: str = "lcbce", seeds=SEEDS_200,
                agent: dict | None = None, delta0="auto", **meta_extra) -> ExperimentConfig:
    return ExperimentConfig.from_dict({
        "environment": env, "agent": {"delta": DELTA, **(agent or {})},
        "meta": {"type": meta, **meta_extra},
        "baseline": {"alpha": alpha, "v0": "auto", "delta0": delta0},
        "horizon": horizon, "seeds": seeds,
    })


def mab_config(horizon: int, alpha: float = 0.2, meta: str = "lcbce", **kw) -> ExperimentConfig:
    return make_config(MAB_ENV, horizon, alpha=alpha, meta=meta, delta0=0.3, **kw)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return (f"criterion {self.number} [{'PASS' if self.passed else 'FAIL'}] {self.title}: "
                f"{self.detail} ({self.seconds:.1f}s)")


def _timed(number: int, title: str):
    def wrap(fn):
        @functools.wraps(fn)
        def inner() -> CriterionResult:
            t0 = time.perf_counter()
            passed, detail = fn()
            return CriterionResult(number, title, bool(passed), detail, time.perf_counter() - t0)
        inner.number = number
        inner.title = title
        return inner
    return wrap


# --- 1 -----------------------------------------------------------------------

def quadratic_budget(values, baseline: BaselineSpec) -> float:
    """max over nonempty prefixes, each prefix summed from scratch; 0 for the empty set."""
    d = baseline.floor - np.asarray(values, dtype=float)
    n = len(d)
    if n == 0:
        return 0.0
    best = -np.inf
    block = 512
    for start in range(0, n, block):
        rows = min(block, n - start)
        best = max(best, float((np.tri(rows, n, k=start) @ d).max()))
    return best


@_timed(1, "budget matches quadratic prefix-max oracle")
def criterion_1():
    rng = np.random.default_rng(2024)
    n_inputs = 10_000
    # log-uniform lengths: most inputs short, a hundred in the 10^3..10^4 decade
    short = np.exp(rng.uniform(0, np.log(1_001), n_inputs - 100))
    long = np.exp(rng.uniform(np.log(1_000), np.log(10_001), 100))
    lengths = np.floor(np.concatenate([short, long])).astype(int) - 1
    lengths[:3] = [0, 1, 10_000]
    inputs, bases = [], []
    for n in lengths:
        inputs.append(rng.uniform(0, 2, n))
        bases.append(BaselineSpec(alpha=float(rng.uniform(0, 1)), v0=float(rng.uniform(0, 2))))
    t0 = time.perf_counter()
    got = [budget(v, b) for v, b in zip(inputs, bases)]
    elapsed = time.perf_counter() - t0
    err = max(abs(g - quadratic_budget(v, b)) for g, v, b in zip(got, inputs, bases))
    return err <= 1e-9 and elapsed < 10.0, f"max |diff| {err:.2e} over {n_inputs} inputs, budget() time {elapsed:.2f}s"


# --- 2 / 6 shared runs ---------------------------------------------------------

def safety_configs() -> dict:
    cfgs = {f"mab alpha={a}": make_config(MAB_ENV, 50_000, alpha=a) for a in (0.05, 0.1, 0.2)}
    cfgs["linucb d=5"] = make_config(LINEAR_ENV, 20_000)
    cfgs["ucbvi S=5 A=3 H=4"] = make_config(TABULAR_ENV, 20_000)
    cfgs["lsvi-ucb d=6 H=3"] = make_config(LOW_RANK_ENV, 10_000)
    return cfgs


def validity_extra_configs() -> dict:
    """Extra noisy settings for lambda validity, where lambda is actually positive."""
    return {
        "ucbvi hoeffding": make_config(TABULAR_ENV, 20_000, agent={"bonus_mode": "hoeffding"}),
        "lsvi-ucb c_beta=0.05": make_config(LOW_RANK_ENV, 10_000, agent={"c_beta": 0.05}),
    }


def zero_noise_configs() -> dict:
    return {
        "mab noiseless": make_config({**MAB_ENV, "noise": "none"}, 5_000, alpha=0.2),
        "linucb noiseless": make_config({**LINEAR_ENV, "generate": {**LINEAR_ENV["generate"], "noise": "none"}},
                                        5_000),
        "ucbvi deterministic": make_config(
            {"type": "tabular", "generate": {"S": 5, "A": 3, "H": 4, "seed": 1, "deterministic": True}}, 5_000),
        "lsvi-ucb deterministic": make_config(
            {"type": "low_rank", "generate": {"S": 3, "A": 2, "d": 6, "H": 3, "seed": 1, "deterministic": True}},
            5_000),
        "lsvi-ucb deterministic c_beta=0.05": make_config(
            {"type": "low_rank", "generate": {"S": 3, "A": 2, "d": 6, "H": 3, "seed": 1, "deterministic": True}},
            5_000, agent={"c_beta": 0.05}),
    }


@functools.lru_cache(maxsize=None)
def _cached_runs(group: str) -> dict:
    cfgs = {"safety": safety_configs, "extra": validity_extra_configs, "zero": zero_noise_configs}[group]()
    return {name: run_many(cfg, keep_curves=False) for name, cfg in cfgs.items()}


@_timed(2, "LCBCE keeps the conservative constraint")
def criterion_2():
    parts, ok = [], True
    for name, runs in _cached_runs("safety").items():
        frac = sum(r.violated for r in runs) / len(runs)
        ok &= frac <= DELTA
        parts.append(f"{name}: {frac:.3f}")
    return ok, "violating-run fraction " + "; ".join(parts)


# --- 3 -----------------------------------------------------------------------

@_timed(3, "BudgetFirst plays exactly T0 baseline rounds then never again")
def criterion_3():
    cfg = mab_config(1, meta="budget_first", seeds={"base": 0, "count": 100})
    env = cfg.build_environment()
    _, T0 = budget_first_schedule(rate_constant(env), cfg.build_baseline(env))
    cfg = cfg.replace(horizon=2 * T0 + 10_000)
    bad_prefix = bad_violation = 0
    for seed in cfg.seeds:
        trace = run_seed(cfg, seed, env)
        bad_prefix += not (trace.is_baseline[:T0].all() and not trace.is_baseline[T0:].any())
        bad_violation += bool(constraint_violations(trace))
    return (bad_prefix == 0 and bad_violation == 0,
            f"T0={T0}, T={cfg.horizon}, seeds with wrong prefix {bad_prefix}, with violations {bad_violation}")


# --- 4 -----------------------------------------------------------------------

@_timed(4, "regret growth ratio T1 -> 4 T1")
def criterion_4():
    T1 = 25_000
    bf = scaling_probe(mab_config(T1, meta="budget_first"), T1).ratio
    lc = scaling_probe(mab_config(T1), T1).ratio
    ctrl = scaling_probe(mab_config(T1, agent={"type": "uniform"}), T1).ratio
    ok = 1.4 <= bf <= 2.6 and 1.4 <= lc <= 2.6 and ctrl >= 3.5
    return ok, f"budget_first {bf:.3f}, lcbce {lc:.3f} (band [1.4, 2.6]); uniform control {ctrl:.3f} (>= 3.5)"


# --- 5 -----------------------------------------------------------------------

@_timed(5, "baseline plays fall as alpha grows")
def criterion_5():
    alphas = [0.05, 0.1, 0.2, 0.4]
    counts = alpha_sweep(mab_config(20_000), alphas)
    vals = [counts[a] for a in alphas]
    factor = counts[0.1] / counts[0.2]
    full = run_many(mab_config(20_000, alpha=1.0, seeds={"base": 0, "count": 20}), keep_curves=False)
    at_one = max(r.n_baseline for r in full)
    ok = is_nonincreasing(vals) and 1.5 <= factor <= 6.0 and at_one == 0
    return ok, (f"mean counts {', '.join(f'{a}: {c:.0f}' for a, c in counts.items())}; "
                f"0.2 -> 0.1 factor {factor:.2f} (band [1.5, 6]); alpha=1 max count {at_one}")


# --- 6 -----------------------------------------------------------------------

@_timed(6, "lower confidence bounds never exceed true values")
def criterion_6():
    parts, ok = [], True
    for group in ("safety", "extra"):
        for name, runs in _cached_runs(group).items():
            frac = sum(r.lcb_failures > 0 for r in runs) / len(runs)
            ok &= frac <= DELTA
            parts.append(f"{name}: {frac:.3f}")
    for name, runs in _cached_runs("zero").items():
        fails = sum(r.lcb_failures > 0 for r in runs)
        ok &= fails == 0
        parts.append(f"{name}: {fails} failing runs")
    return ok, "failing-run fraction " + "; ".join(parts)


# --- 7 -----------------------------------------------------------------------

def feature_space_values(inst, policy=None) -> np.ndarray:
    """Backward induction straight from (phi, mu, theta), never forming P or R."""
    H, S = inst.H, inst.S
    V = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        Q = inst.phi @ (inst.theta[h] + inst.mu[h] @ V[h + 1])
        V[h] = Q.max(axis=1) if policy is None else Q[np.arange(S), policy[h]]
    return V


@_timed(7, "value oracles agree across representations and with enumeration")
def criterion_7():
    rng = np.random.default_rng(7)
    shapes = [(S, A, H) for S in (1, 2, 3, 4) for A in (1, 2, 3, 4) for H in (1, 2, 3, 4) if S * A * H <= 16]
    worst_enum = worst_rep = 0.0
    for i in range(100):
        S, A, H = shapes[rng.integers(len(shapes))]
        if i % 2 == 0:
            inst = random_tabular(S, A, H, seed=int(rng.integers(2**31)), deterministic=bool(i % 4 == 0))
        else:
            d = int(rng.integers(1, S * A + 1))
            inst = random_low_rank(S, A, d, H, seed=int(rng.integers(2**31)))
            tab = inst.to_tabular()
            worst_rep = max(worst_rep, abs(feature_space_values(inst)[0, 0] - optimal_value(inst)))
            worst_rep = max(worst_rep, np.abs(optimal_values(tab.P, tab.R)[0] - feature_space_values(inst)).max())
            for pi in enumerate_policies(inst):
                worst_rep = max(worst_rep, np.abs(evaluate_policy(tab.P, tab.R, pi)
                                                  - feature_space_values(inst, pi)).max())
                worst_rep = max(worst_rep, abs(true_policy_value(inst, pi) - feature_space_values(inst, pi)[0, 0]))
        worst_enum = max(worst_enum, abs(optimal_value(inst) - brute_force_optimal_value(inst)))
    ok = worst_enum <= 1e-9 and worst_rep <= 1e-9
    return ok, f"100 instances: max |V* - enumeration| {worst_enum:.1e}, max low-rank vs tabular {worst_rep:.1e}"


# --- 8 -----------------------------------------------------------------------

@_timed(8, "summed LCB gaps grow sublinearly")
def criterion_8():
    out, ok = [], True
    for name, cfg, T in (("mab", mab_config(1, meta="none"), 25_000),
                         ("tabular", make_config(TABULAR_ENV, 1, meta="none"), 5_000)):
        means = [np.mean([r.lcb_gap_sum for r in run_many(cfg.replace(horizon=h), keep_curves=False)])
                 for h in (T, 4 * T)]
        ratio = means[1] / means[0]
        ok &= ratio <= 3.0
        out.append(f"{name} T={T}->{4 * T}: {ratio:.3f}")
    return ok, "ratio " + "; ".join(out) + " (<= 3)"


# --- 9 -----------------------------------------------------------------------

@_timed(9, "identical configs give byte-identical CSVs")
def criterion_9():
    seeds = {"base": 3, "count": 3}
    cfgs = [mab_config(2_000, seeds=seeds), mab_config(2_000, meta="budget_first", seeds=seeds),
            make_config(LINEAR_ENV, 1_000, seeds=seeds), make_config(TABULAR_ENV, 1_000, seeds=seeds),
            make_config(LOW_RANK_ENV, 500, seeds=seeds), mab_config(500, mode="fresh", seeds=seeds)]
    mismatched = recount_bad = 0
    with tempfile.TemporaryDirectory() as tmp:
        for i, cfg in enumerate(cfgs):
            dirs = [Path(tmp) / f"{i}_{k}" for k in "ab"]
            summaries = [run_experiment(cfg, d) for d in dirs]
            for seed in cfg.seeds:
                mismatched += not filecmp.cmp(dirs[0] / run_csv_name(seed), dirs[1] / run_csv_name(seed),
                                              shallow=False)
            mismatched += not filecmp.cmp(dirs[0] / "summary.csv", dirs[1] / "summary.csv", shallow=False)
            recount_bad += recount_violations(dirs[0]) != summaries[0].violation_count
    return mismatched == 0 and recount_bad == 0, f"{len(cfgs)} configs x 3 seeds: {mismatched} differing files"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


def run_all(numbers=None, echo=print) -> list:
    results = []
    for fn in CRITERIA:
        if numbers and fn.number not in numbers:
            continue
        res = fn()
        if echo:
            echo(res.line())
        results.append(res)
    return results
