"""Desk-scale checks of the regret growth rate and the baseline-play trend in alpha."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .runner import run_many


def growth_ratio(short: float, long: float) -> float:
    """Ratio of mean cumulative regret at 4 T1 to that at T1."""
    if short <= 0:
        raise ValueError(f"regret at the short horizon must be positive, got {short}")
    return long / short


@dataclass
class ScalingResult:
    T1: int
    mean_short: float
    mean_long: float

    @property
    def ratio(self) -> float:
        return growth_ratio(self.mean_short, self.mean_long)


def scaling_probe(config: ExperimentConfig, T1: Optional[int] = None, workers: Optional[int] = None) -> ScalingResult:
    """Mean cumulative regret at T1 and 4 T1 over the config's seeds (two independent run families)."""
    T1 = config.horizon if T1 is None else T1
    means = []
    for T in (T1, 4 * T1):
        runs = run_many(config.replace(horizon=T), keep_curves=False, workers=workers)
        means.append(float(np.mean([r.final_regret for r in runs])))
    return ScalingResult(T1, *means)


def alpha_sweep(config: ExperimentConfig, alphas: Sequence[float], workers: Optional[int] = None) -> dict:
    """Mean baseline-play count for each alpha."""
    alphas = [float(a) for a in alphas]
    if any(a <= 0 for a in alphas):
        raise ValueError("alphas must be strictly positive")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    out = {}
    for a in alphas:
        cfg = config.replace(baseline={**config.baseline, "alpha": a})
        runs = run_many(cfg, keep_curves=False, workers=workers)
        out[a] = float(np.mean([r.n_baseline for r in runs]))
    return out


def is_nonincreasing(counts: Sequence[float], rel_tol: float = 0.05) -> bool:
    """No step up by more than ``rel_tol`` of the previous value."""
    return all(b <= a * (1.0 + rel_tol) for a, b in zip(counts, counts[1:]))
