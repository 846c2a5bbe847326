"""Randomised invariants."""
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from conservex import kernels
from conservex.agents import ConfidencePolicy, UcbState, ucb_indices
from conservex.conservative import PLAY, BudgetState, budget, budget_first_schedule, lcbce_decide, proxy_budget
from conservex.core import BaselineSpec, RunTrace, constraint_slack, constraint_violations, cumulative_regret
from conservex.environments import evaluate_policy, optimal_value, random_low_rank, random_tabular
from conservex.harness import reference_curve

unit = st.floats(0.0, 1.0, allow_nan=False)
values = st.lists(st.floats(0.0, 2.0, allow_nan=False), max_size=60)
baselines = st.builds(BaselineSpec, alpha=unit, v0=st.floats(0.0, 2.0))


def naive_budget(vals, b):
    if not vals:
        return 0.0
    return max(math.fsum(b.floor - v for v in vals[:k]) for k in range(1, len(vals) + 1))


def make_trace(vals, b, v_star):
    n = len(vals)
    return RunTrace(is_baseline=np.zeros(n, bool), action=np.full(n, -1), realized_reward=vals, true_value=vals,
                    lcb=np.full(n, np.nan), v_star=v_star, baseline=b)


@given(values, baselines)
def test_budget_matches_naive(vals, b):
    assert abs(budget(vals, b) - naive_budget(vals, b)) <= 1e-9


@given(st.lists(st.tuples(st.floats(0.0, 2.0), unit), max_size=60), baselines)
def test_proxy_dominates_budget(pairs, b):
    vals = [v for v, _ in pairs]
    lams = [v * f for v, f in pairs]
    assert proxy_budget(lams, b) >= budget(vals, b) - 1e-12


@given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=50), baselines)
def test_regret_monotone_and_slack_telescopes(vals, b):
    tr = make_trace(vals, b, v_star=2.0)
    reg = [cumulative_regret(tr, t) for t in range(len(vals) + 1)]
    assert all(y >= x - 1e-12 for x, y in zip(reg, reg[1:]))
    for t in range(2, len(vals) + 1):
        diff = constraint_slack(tr, t) - constraint_slack(tr, t - 1)
        assert abs(diff - (vals[t - 1] - b.floor)) <= 1e-9


@given(st.lists(unit, min_size=1, max_size=50), baselines)
def test_no_violation_above_floor(fracs, b):
    vals = [b.floor + f for f in fracs]
    assert constraint_violations(make_trace(vals, b, v_star=max(vals))) == []


@given(st.lists(st.floats(0.0, 1.5), max_size=80), st.floats(0.01, 1.0), st.floats(0.1, 2.0),
       st.sampled_from(["stale", "fresh"]))
def test_lcbce_play_never_exceeds_budget(lams, alpha, v0, mode):
    b = BaselineSpec(alpha=alpha, v0=v0)
    state, cache = BudgetState(alpha, v0), []
    for lam in lams:
        fresh = list(cache) if mode == "fresh" else None
        if lcbce_decide(state, ConfidencePolicy(1, lam, 1), b, mode, fresh) == PLAY:
            cache.append(lam)
            assert state.deficit_max <= state.accumulated + 1e-12
            assert abs(state.deficit_max - proxy_budget(cache, b)) <= 1e-9
        assert abs(state.accumulated - alpha * v0 * state.n0) <= 1e-9


@given(st.floats(0.1, 10.0), st.floats(0.01, 1.0), st.floats(0.05, 2.0), st.floats(0.0, 1.0))
def test_schedule_funds_budget(C, alpha, v0, delta0):
    b = BaselineSpec(alpha=alpha, v0=v0, delta0=delta0)
    B, T0 = budget_first_schedule(C, b)
    per = alpha * v0
    assert T0 * per >= B * (1 - 1e-9)
    assert (T0 - 1) * per < B


@settings(max_examples=40)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
def test_low_rank_views_agree(S, A, d, H, seed):
    env = random_low_rank(S, A, d, H, seed)
    tab = env.to_tabular()
    assert np.allclose(tab.P.sum(-1), 1.0, atol=1e-12) and tab.P.min() >= -1e-12
    pi = np.random.default_rng(seed).integers(A, size=(H, S))
    V = np.zeros(S)
    for h in range(H - 1, -1, -1):
        Q = env.phi @ (env.theta[h] + env.mu[h] @ V)
        V = Q[np.arange(S), pi[h]]
    assert abs(V[env.s1] - evaluate_policy(tab.P, tab.R, pi)[0, env.s1]) <= 1e-9


@settings(max_examples=40)
@given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 4), st.integers(0, 10_000))
def test_optimal_dominates_policies(S, A, H, seed):
    env = random_tabular(S, A, H, seed)
    vstar = optimal_value(env)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        pi = rng.integers(A, size=(H, S))
        assert evaluate_policy(env.P, env.R, pi)[0, 0] <= vstar + 1e-12


@given(st.lists(st.tuples(st.integers(0, 50), unit), min_size=1, max_size=6), st.floats(0.01, 0.99))
def test_ucb_indices_ordered(arms, delta):
    s = UcbState(len(arms), delta)
    for i, (n, m) in enumerate(arms):
        s.counts[i], s.sums[i] = n, n * m
    ucb, lcb = ucb_indices(s)
    assert np.all(lcb >= 0) and np.all(lcb <= ucb)
    assert np.all(lcb <= np.where(s.counts > 0, s.means, 0.0) + 1e-12)


@settings(suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(1, 6), st.integers(1, 20), st.integers(0, 10_000))
def test_sherman_morrison_tracks_inverse(d, n, seed):
    rng = np.random.default_rng(seed)
    A = np.eye(d)
    Ainv = np.eye(d)
    for _ in range(n):
        x = rng.normal(size=d)
        A += np.outer(x, x)
        kernels.sherman_morrison(Ainv, x)
    assert np.allclose(Ainv @ A, np.eye(d), atol=1e-8)


@given(st.sampled_from(["mab", "linear_bandit", "tabular", "low_rank"]), st.floats(0.01, 1.0),
       st.floats(0.0, 1.0))
def test_reference_curve_increasing(setting, alpha, delta0):
    p = {"A": 3, "d": 2, "S": 2, "H": 2, "alpha": alpha, "mu0": 0.5, "delta0": delta0}
    y = reference_curve(setting, p, np.arange(1, 200))
    assume(np.all(np.isfinite(y)))
    assert np.all(np.diff(y) > 0)
