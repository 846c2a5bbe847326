"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from conservex import kernels
from conservex.agents import LinUcbState, LsviUcbState, UcbState, UcbviState
from conservex.conservative import run_conservative
from conservex.core import BaselineSpec
from conservex.environments import MabInstance, random_linear_bandit, random_low_rank, random_tabular
from conservex.kernels import _fallback as fb


def kernel_cases():
    rng = np.random.default_rng(0)
    v = rng.uniform(0, 2, 10_000)
    x = rng.normal(size=8)
    env = random_tabular(10, 4, 6, seed=0)
    pi = rng.integers(4, size=(6, 10))
    N = rng.integers(0, 20, size=(6, 10, 4)).astype(np.int64)
    p_hat = np.broadcast_to(np.ones(10) / 10, (6, 10, 4, 10)).copy()
    r_hat = rng.uniform(size=(6, 10, 4))
    return {
        "budget_prefix_max (n=10k)": lambda m: m.budget_prefix_max(v, 0.7),
        "sherman_morrison (d=8)": lambda m: m.sherman_morrison(np.eye(8), x),
        "policy_value (S10 A4 H6)": lambda m: m.policy_value(env.P, env.R, pi, 0),
        "ucbvi_upper (S10 A4 H6)": lambda m: m.ucbvi_upper(N, r_hat, p_hat, 1.0, 5.0, True),
    }


def loop_cases():
    mab = MabInstance(means=[0.8, 0.78, 0.74, 0.68], baseline_mean=0.5)
    lin = random_linear_bandit(5, 20, 0)
    tab = random_tabular(5, 3, 4, 0)
    low = random_low_rank(8, 3, 6, 3, 0)
    return {
        "mab T=20000": (mab, lambda: UcbState(4), 20_000),
        "linear T=3000": (lin, lambda: LinUcbState(5), 3_000),
        "tabular T=1000": (tab, lambda: UcbviState(5, 3, 4, horizon=1000), 1_000),
        "low_rank T=300": (low, lambda: LsviUcbState(low.phi, 3, horizon=300), 300),
    }


def best(fn, repeat, number=1):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.FUSED:
        print("compiled extension unavailable; only the fallback can be timed")
        return
    print(f"{'kernel':32s} {'native':>12s} {'python':>12s} {'speedup':>8s}")
    for name, call in kernel_cases().items():
        a = best(lambda: call(kernels.fast), args.repeat, 20)
        b = best(lambda: call(fb), args.repeat, 20)
        print(f"{name:32s} {a * 1e6:10.1f}us {b * 1e6:10.1f}us {b / a:7.1f}x")
    print()
    print(f"{'run loop (lcbce)':32s} {'fused':>12s} {'python':>12s} {'speedup':>8s}")
    for name, (env, make, T) in loop_cases().items():
        base = BaselineSpec(alpha=0.1, v0=env.baseline_value)
        a = best(lambda: run_conservative(env, make(), "lcbce", base, T, 0), args.repeat)
        b = best(lambda: run_conservative(env, make(), "lcbce", base, T, 0, backend="python"), args.repeat)
        print(f"{name:32s} {a:11.3f}s {b:11.3f}s {b / a:7.1f}x")


if __name__ == "__main__":
    main()
