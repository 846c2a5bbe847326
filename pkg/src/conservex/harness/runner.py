"""Seeded Monte-Carlo runs, per-run CSV emission and the aggregate summary."""
from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..conservative import run_conservative
from ..core import RunTrace, SLACK_TOL, regret_curve, slack_curve
from .config import ExperimentConfig, setting_of
from .reference import REFERENCE_NOTE, reference_curve, reference_params

WORKERS_ENV = "CONSERVEX_WORKERS"
LCB_TOL = 1e-9
QUANTILES = (0.05, 0.5, 0.95)
CSV_COLUMNS = ("t", "policy_id", "is_baseline", "realized_reward", "true_value", "cum_regret",
               "constraint_lhs", "constraint_rhs", "budget_accumulated", "deficit_sum", "deficit_max")
SUMMARY_GRID_POINTS = 1000


@dataclass
class RunStats:
    seed: int
    horizon: int
    v_star: float
    n_baseline: int
    violated: bool
    final_regret: float
    min_slack: float
    lcb_failures: int
    lcb_gap_sum: float
    lcb_positive: int
    backend: str
    regret: Optional[np.ndarray] = None
    slack: Optional[np.ndarray] = None


@dataclass
class AggregateSummary:
    seeds: list
    horizon: int
    runs: list = field(repr=False)
    t: Optional[np.ndarray] = field(default=None, repr=False)
    regret_mean: Optional[np.ndarray] = field(default=None, repr=False)
    regret_quantiles: dict = field(default_factory=dict, repr=False)
    slack_mean: Optional[np.ndarray] = field(default=None, repr=False)
    slack_quantiles: dict = field(default_factory=dict, repr=False)

    @property
    def n_runs(self) -> int:
        return len(self.runs)

    @property
    def violating_seeds(self) -> list:
        return [r.seed for r in self.runs if r.violated]

    @property
    def violation_count(self) -> int:
        return len(self.violating_seeds)

    @property
    def violation_fraction(self) -> float:
        return self.violation_count / max(self.n_runs, 1)

    @property
    def baseline_plays(self) -> list:
        return [r.n_baseline for r in self.runs]

    @property
    def mean_baseline_plays(self) -> float:
        return float(np.mean(self.baseline_plays))

    @property
    def mean_final_regret(self) -> float:
        return float(np.mean([r.final_regret for r in self.runs]))

    @property
    def lcb_failure_runs(self) -> int:
        return sum(r.lcb_failures > 0 for r in self.runs)


def trace_stats(trace: RunTrace, keep_curves: bool = True) -> RunStats:
    regret = regret_curve(trace)
    slack = slack_curve(trace)
    played = ~trace.is_baseline & ~np.isnan(trace.lcb)
    lcb, val = trace.lcb[played], trace.true_value[played]
    return RunStats(
        seed=trace.seed, horizon=len(trace), v_star=trace.v_star, n_baseline=trace.n_baseline,
        violated=bool(np.any(slack < -SLACK_TOL)), final_regret=float(regret[-1]),
        min_slack=float(slack.min()), lcb_failures=int(np.sum(lcb > val + LCB_TOL)),
        lcb_gap_sum=float(np.sum(val - lcb)), lcb_positive=int(np.sum(lcb > 0)),
        backend=trace.meta.get("backend", "python"),
        regret=regret if keep_curves else None, slack=slack if keep_curves else None)


def run_seed(config: ExperimentConfig, seed: int, env=None) -> RunTrace:
    env = config.build_environment() if env is None else env
    baseline = config.build_baseline(env)
    agent = config.build_agent(env, seed)
    return run_conservative(env, agent, config.meta["type"], baseline, config.horizon, seed,
                            C=config.meta_constant(env), mode=config.meta["mode"])


def _fmt(x) -> str:
    return repr(float(x))


def write_run_csv(trace: RunTrace, path) -> None:
    regret = regret_curve(trace)
    lhs = np.cumsum(trace.true_value)
    rhs = trace.baseline.floor * np.arange(1, len(trace) + 1)
    budget = [trace.budget_accumulated, trace.deficit_sum, trace.deficit_max]
    ids = trace.policy_ids()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i in range(len(trace)):
            w.writerow([i + 1, ids[i], int(trace.is_baseline[i]), _fmt(trace.realized_reward[i]),
                        _fmt(trace.true_value[i]), _fmt(regret[i]), _fmt(lhs[i]), _fmt(rhs[i]),
                        *("" if col is None else _fmt(col[i]) for col in budget)])


def read_run_csv(path) -> dict:
    """Columns of a per-run CSV as arrays; empty budget columns come back as ``None``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    cols = {name: [r[j] for r in body] for j, name in enumerate(header)}
    out = {"t": np.array(cols["t"], dtype=np.int64), "policy_id": cols["policy_id"],
           "is_baseline": np.array(cols["is_baseline"], dtype=np.int64).astype(bool)}
    for name in CSV_COLUMNS[3:]:
        vals = cols[name]
        out[name] = None if vals and all(v == "" for v in vals) else np.array(vals, dtype=float)
    return out


def recompute_columns(columns: dict, v_star: float, alpha: float, v0: float) -> dict:
    """Rebuild the derived columns from true_value alone."""
    tv = columns["true_value"]
    t = np.arange(1, len(tv) + 1)
    lhs = np.cumsum(tv)
    rhs = (1.0 - alpha) * v0 * t
    return {"cum_regret": np.cumsum(v_star - tv), "constraint_lhs": lhs, "constraint_rhs": rhs,
            "slack": lhs - rhs}


def run_csv_name(seed: int) -> str:
    return f"run_seed{seed}.csv"


def _one(args):
    config, seed, out_dir, keep_curves = args
    trace = run_seed(config, seed)
    if out_dir is not None:
        write_run_csv(trace, Path(out_dir) / run_csv_name(seed))
    return trace_stats(trace, keep_curves)


def worker_count(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def run_many(config: ExperimentConfig, seeds=None, out_dir=None, keep_curves: bool = True,
             workers: Optional[int] = None) -> list:
    """Run every seed; results come back ordered as ``seeds`` regardless of scheduling."""
    seeds = list(config.seeds if seeds is None else seeds)
    jobs = [(config, s, out_dir, keep_curves) for s in seeds]
    n = worker_count(workers)
    if n == 1 or len(jobs) == 1:
        return [_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_one, jobs, chunksize=max(1, len(jobs) // (4 * n))))


def aggregate(runs: list, seeds: list, horizon: int) -> AggregateSummary:
    summary = AggregateSummary(seeds=list(seeds), horizon=horizon, runs=runs)
    if runs and runs[0].regret is not None:
        R = np.stack([r.regret for r in runs])
        S = np.stack([r.slack for r in runs])
        summary.t = np.arange(1, horizon + 1)
        summary.regret_mean = R.mean(axis=0)
        summary.slack_mean = S.mean(axis=0)
        summary.regret_quantiles = {q: np.quantile(R, q, axis=0) for q in QUANTILES}
        summary.slack_quantiles = {q: np.quantile(S, q, axis=0) for q in QUANTILES}
    return summary


def summary_grid(T: int, points: int = SUMMARY_GRID_POINTS) -> np.ndarray:
    return np.unique(np.linspace(1, T, min(T, points)).round().astype(np.int64))


def write_summary(summary: AggregateSummary, config: ExperimentConfig, out_dir) -> None:
    out_dir = Path(out_dir)
    env = config.build_environment()
    resolved = config.resolved()
    grid = summary_grid(summary.horizon)
    ref = reference_curve(setting_of(env), reference_params(env, config.build_baseline(env)), grid)
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        qs = [f"{q:g}" for q in QUANTILES]
        w.writerow(["t", "regret_mean", *(f"regret_q{q}" for q in qs), "slack_mean",
                    *(f"slack_q{q}" for q in qs), "reference_upper"])
        for k, t in enumerate(grid):
            i = t - 1
            w.writerow([int(t), _fmt(summary.regret_mean[i]),
                        *(_fmt(summary.regret_quantiles[q][i]) for q in QUANTILES),
                        _fmt(summary.slack_mean[i]), *(_fmt(summary.slack_quantiles[q][i]) for q in QUANTILES),
                        _fmt(ref[k])])
    payload = {
        "n_runs": summary.n_runs,
        "violation_count": summary.violation_count,
        "violating_seeds": summary.violating_seeds,
        "violation_fraction": summary.violation_fraction,
        "lcb_failure_runs": summary.lcb_failure_runs,
        "runs": [{"seed": r.seed, "csv": run_csv_name(r.seed), "v_star": r.v_star, "baseline_plays": r.n_baseline,
                  "final_regret": r.final_regret, "min_slack": r.min_slack, "violated": r.violated,
                  "lcb_failures": r.lcb_failures, "backend": r.backend} for r in summary.runs],
        "mean_final_regret": summary.mean_final_regret,
        "mean_baseline_plays": summary.mean_baseline_plays,
        "reference_curve": REFERENCE_NOTE,
        "config": resolved,
    }
    (out_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def run_experiment(config: ExperimentConfig, out_dir=None, workers: Optional[int] = None) -> AggregateSummary:
    """Run all seeds, write one CSV per seed plus summary.csv/summary.json when an output dir is set."""
    out_dir = out_dir if out_dir is not None else config.output_dir
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    runs = run_many(config, out_dir=out_dir, workers=workers)
    summary = aggregate(runs, config.seeds, config.horizon)
    if out_dir is not None:
        write_summary(summary, config, out_dir)
    return summary


def recount_violations(out_dir) -> int:
    """Violation count rebuilt from the per-run CSVs and the recorded config alone."""
    out_dir = Path(out_dir)
    meta = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
    base = meta["config"]["baseline"]
    count = 0
    for run in meta["runs"]:
        cols = read_run_csv(out_dir / run["csv"])
        rec = recompute_columns(cols, run["v_star"], base["alpha"], base["v0"])
        count += bool(np.any(rec["slack"] < -SLACK_TOL))
    return count
