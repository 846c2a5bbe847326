import os
import subprocess
import sys

import numpy as np
import pytest

from conservex import kernels
from conservex.agents import LinUcbState, LsviUcbState, UcbState, UcbviState, UniformAgent
from conservex.conservative import run_conservative
from conservex.core import BaselineSpec
from conservex.environments import MabInstance, random_linear_bandit, random_low_rank, random_tabular
from conservex.kernels import _fallback as fb

native = pytest.mark.skipif(not kernels.FUSED, reason="compiled extension not built")


def rand_counts(rng, H, S, A):
    N = rng.integers(0, 6, size=(H, S, A))
    nxt = np.zeros((H, S, A, S))
    for idx in np.ndindex(H, S, A):
        if N[idx]:
            nxt[idx] = rng.multinomial(N[idx], np.ones(S) / S)
    p_hat = np.where(N[..., None] > 0, nxt / np.maximum(N, 1)[..., None], 0.0)
    r_hat = rng.uniform(size=(H, S, A)) * (N > 0)
    return N.astype(np.int64), r_hat, p_hat


@native
class TestNativeMatchesFallback:
    def test_budget_prefix_max(self):
        rng = np.random.default_rng(0)
        for n in [0, 1, 2, 17, 1000]:
            v = rng.uniform(0, 2, n)
            assert kernels.fast.budget_prefix_max(v, 0.7) == pytest.approx(fb.budget_prefix_max(v, 0.7), abs=1e-12)

    def test_sherman_morrison(self):
        rng = np.random.default_rng(1)
        A = np.eye(4) * 2.0
        a, b = np.linalg.inv(A), np.linalg.inv(A)
        for _ in range(20):
            x = rng.normal(size=4)
            kernels.fast.sherman_morrison(a, x)
            fb.sherman_morrison(b, x)
            A += np.outer(x, x)
        assert np.allclose(a, b, atol=1e-12) and np.allclose(a, np.linalg.inv(A), atol=1e-9)

    @pytest.mark.parametrize("bernstein", [True, False])
    def test_ucbvi(self, bernstein):
        rng = np.random.default_rng(2)
        N, r_hat, p_hat = rand_counts(rng, 3, 4, 2)
        a = kernels.fast.ucbvi_upper(N, r_hat, p_hat, 1.0, 5.0, bernstein)
        b = fb.ucbvi_upper(N, r_hat, p_hat, 1.0, 5.0, bernstein)
        assert np.allclose(a[0], b[0], atol=1e-12) and np.array_equal(a[1], b[1])
        assert np.array_equal(np.isinf(a[2]), np.isinf(b[2]))
        la = kernels.fast.ucbvi_lower(N, r_hat, p_hat, 1.0, a[2], a[1])
        lb = fb.ucbvi_lower(N, r_hat, p_hat, 1.0, b[2], b[1])
        assert np.allclose(la, lb, atol=1e-12)

    def test_policy_value(self):
        env = random_tabular(4, 3, 3, seed=0)
        pi = np.random.default_rng(0).integers(3, size=(3, 4))
        assert kernels.fast.policy_value(env.P, env.R, pi, 0) == pytest.approx(fb.policy_value(env.P, env.R, pi, 0))

    def test_lsvi(self):
        env = random_low_rank(5, 2, 3, 3, seed=1)
        st, rng = LsviUcbState(env.phi, 3, beta=0.5), np.random.default_rng(0)
        for _ in range(40):
            h, s, a, s2 = rng.integers(3), rng.integers(5), rng.integers(2), rng.integers(5)
            st.add(int(h), int(s), int(a), float(rng.uniform()), int(s2))
        args = (st.Lambda_inv, st.b, st.M, st.phi)
        ba, bb = kernels.fast.lsvi_bonus(st.Lambda_inv, st.phi, 0.5), fb.lsvi_bonus(st.Lambda_inv, st.phi, 0.5)
        assert np.allclose(ba, bb, atol=1e-12)
        ua, ub = kernels.fast.lsvi_upper(*args, ba, 1.0), fb.lsvi_upper(*args, bb, 1.0)
        assert np.allclose(ua[0], ub[0], atol=1e-12) and np.array_equal(ua[1], ub[1])
        assert np.allclose(kernels.fast.lsvi_lower(*args, ba, 1.0, ua[1]), fb.lsvi_lower(*args, bb, 1.0, ub[1]),
                           atol=1e-12)


def _pair(env, make_agent, meta, base, T, seed, C=None):
    fused = run_conservative(env, make_agent(), meta, base, T, seed, C=C)
    slow = run_conservative(env, make_agent(), meta, base, T, seed, C=C, backend="python")
    return fused, slow


SETTINGS = {
    "mab": (MabInstance(means=[0.8, 0.78, 0.74, 0.68], baseline_mean=0.5), lambda: UcbState(4, 0.1), 3000),
    "mab_uniform": (MabInstance(means=[0.8, 0.6], baseline_mean=0.5),
                    lambda: UniformAgent(2, np.random.default_rng((0, 1))), 2000),
    "linear": (random_linear_bandit(5, 20, 0), lambda: LinUcbState(5, 0.1), 1500),
    "tabular": (random_tabular(5, 3, 4, 0), lambda: UcbviState(5, 3, 4, 0.1, horizon=800), 800),
    "lowrank": (random_low_rank(8, 3, 6, 3, 0),
                lambda: LsviUcbState(random_low_rank(8, 3, 6, 3, 0).phi, 3, horizon=500, c_beta=0.05), 500),
}


@native
@pytest.mark.parametrize("meta", ["none", "budget_first", "lcbce"])
@pytest.mark.parametrize("name", sorted(SETTINGS))
def test_fused_loop_matches_python_loop(name, meta):
    env, make, T = SETTINGS[name]
    v0 = env.baseline_value
    base = BaselineSpec(alpha=0.1, v0=v0, delta0=0.2)
    fused, slow = _pair(env, make, meta, base, T, seed=7, C=1.0)
    assert fused.meta["backend"] == "native" and slow.meta["backend"] == "python"
    assert np.array_equal(fused.is_baseline, slow.is_baseline)
    assert np.array_equal(fused.action, slow.action)
    assert np.allclose(fused.realized_reward, slow.realized_reward, atol=1e-12)
    assert np.allclose(fused.true_value, slow.true_value, atol=1e-12)
    assert np.allclose(np.nan_to_num(fused.lcb, nan=-1), np.nan_to_num(slow.lcb, nan=-1), atol=1e-9)
    for col in ("budget_accumulated", "deficit_sum", "deficit_max"):
        a, b = getattr(fused, col), getattr(slow, col)
        assert (a is None) == (b is None)
        if a is not None:
            assert np.allclose(a, b, atol=1e-9)


@native
def test_fused_loop_leaves_agent_statistics():
    env, make, T = SETTINGS["tabular"]
    base = BaselineSpec(alpha=0.1, v0=env.baseline_value)
    a, b = make(), make()
    run_conservative(env, a, "lcbce", base, T, 3)
    run_conservative(env, b, "lcbce", base, T, 3, backend="python")
    assert np.array_equal(a.N, b.N) and np.allclose(a.p_hat, b.p_hat)
    assert a.propose().lcb_value == pytest.approx(b.propose().lcb_value, abs=1e-12)


def test_pure_python_switch():
    code = ("import conservex.kernels as k, sys; "
            "from conservex.conservative import run_conservative; "
            "from conservex.agents import UcbState; from conservex.core import BaselineSpec; "
            "from conservex.environments import MabInstance; "
            "tr = run_conservative(MabInstance(means=[0.7], baseline_mean=0.5), UcbState(1), 'lcbce', "
            "BaselineSpec(0.1, 0.5), 50); print(k.BACKEND, k.FUSED, tr.meta['backend'])")
    env = {**os.environ, "CONSERVEX_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "False", "python"]


def test_native_backend_request_without_loop():
    env = MabInstance(means=[0.7], baseline_mean=0.5)
    from conservex.conservative import ConfigError
    with pytest.raises(ConfigError):
        run_conservative(env, UcbState(1), "lcbce", BaselineSpec(0.1, 0.5), 10, mode="fresh", backend="native")
