"""Reference regret curves from the known rate expressions, log factors dropped.

These are visual guides. The scale ``c`` is a plotting knob and the curves make
no claim about constants.
"""
from __future__ import annotations

import math

import numpy as np

from ..core import BaselineSpec
from ..environments import LinearBanditInstance, LowRankMdpInstance, MabInstance, optimal_value

SETTINGS = ("mab", "linear_bandit", "tabular", "low_rank")
REFERENCE_NOTE = ("reference_upper = c * (rate(t) + constant term) with log factors dropped and c = 1; "
                  "a visual guide, not a claim about constants")


def _constant(dim_factor: float, alpha: float, mu0: float, delta0: float) -> float:
    if delta0 == 0:
        return 0.0
    am = alpha * mu0
    if am == 0:
        return math.inf
    return dim_factor * delta0 / (am * (am + delta0))


def _factors(setting: str, params: dict, bound: str) -> tuple[float, float]:
    """(coefficient of t under the square root, multiplier of the constant term)."""
    if setting == "mab":
        A = params["A"]
        return A, A
    if setting == "linear_bandit":
        d = params["d"]
        return d * d, d * d
    if setting == "tabular":
        S, A, H = params["S"], params["A"], params["H"]
        k = H ** 3 * S * A
        return k, k
    if bound == "lower":
        d, H = params["d"], params["H"]
        return d * d * H ** 3, d * d * H ** 3
    d, H = params["d"], params["H"]
    k = d ** 3 * H ** 4
    return k, k


def reference_curve(setting: str, params: dict, t_grid, c: float = 1.0, bound: str = "upper") -> np.ndarray:
    """c * (sqrt(k t) + k * delta0 / (alpha mu0 (alpha mu0 + delta0))) on ``t_grid``.

    k is A (mab), d^2 (linear_bandit), H^3 S A (tabular) or d^3 H^4 (low_rank;
    d^2 H^3 for ``bound="lower"``). ``params`` also needs alpha, mu0, delta0.
    """
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    if bound not in ("upper", "lower"):
        raise ValueError(f"bound must be 'upper' or 'lower', got {bound!r}")
    k_rate, k_const = _factors(setting, params, bound)
    t = np.asarray(t_grid, dtype=float)
    const = _constant(k_const, params["alpha"], params["mu0"], params["delta0"])
    return c * (np.sqrt(k_rate * t) + const)


def reference_params(env, baseline: BaselineSpec) -> dict:
    """Dimension and baseline parameters of ``env``; delta0 falls back to the oracle gap."""
    delta0 = baseline.delta0 if baseline.delta0 is not None else max(0.0, optimal_value(env) - baseline.v0)
    p = {"alpha": baseline.alpha, "mu0": baseline.v0, "delta0": delta0}
    if isinstance(env, MabInstance):
        p["A"] = env.K
    elif isinstance(env, LinearBanditInstance):
        p["d"] = env.d
    elif isinstance(env, LowRankMdpInstance):
        p.update(d=env.d, H=env.H)
    else:
        p.update(S=env.S, A=env.A, H=env.H)
    return p
