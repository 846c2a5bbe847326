"""Command line entry point: run, sweep, check, generate."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .conservative import ConfigError, InfeasibleBaselineError
from .environments import GENERATORS, instance_to_dict
from .harness import ConfigLoadError, load_config, run_experiment

SWEEP_PARAMS = {
    "alpha": lambda cfg, v: cfg.replace(baseline={**cfg.baseline, "alpha": float(v)}),
    "horizon": lambda cfg, v: cfg.replace(horizon=int(v)),
    "delta": lambda cfg, v: cfg.replace(agent={**cfg.agent, "delta": float(v)}),
}


def _load(args):
    cfg = load_config(args.config)
    if args.seeds is not None or args.base_seed is not None:
        count = args.seeds if args.seeds is not None else len(cfg.seeds)
        base = args.base_seed if args.base_seed is not None else (cfg.seeds[0] if cfg.seeds else 0)
        if count < 1 or base < 0:
            raise ConfigLoadError("seeds", "--seeds must be >= 1 and --base-seed >= 0")
        cfg = cfg.replace(seeds=list(range(base, base + count)))
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    out = args.out or cfg.output_dir
    summary = run_experiment(cfg, out, workers=args.workers)
    limit = cfg.violation_threshold()
    print(f"runs: {summary.n_runs}  violating runs: {summary.violation_count} "
          f"({summary.violation_fraction:.4f}, allowed {limit})")
    print(f"mean final regret: {summary.mean_final_regret:.4f}  mean baseline plays: {summary.mean_baseline_plays:.1f}")
    if out:
        print(f"wrote {out}")
    return 1 if summary.violation_fraction > limit else 0


def _cmd_sweep(args) -> int:
    base = _load(args)
    apply = SWEEP_PARAMS[args.param]
    rows, worst = [], 0
    for v in args.values:
        cfg = apply(base, v)
        out = Path(args.out) / f"{args.param}={v}" if args.out else None
        s = run_experiment(cfg, out, workers=args.workers)
        rows.append([v, s.mean_baseline_plays, s.mean_final_regret, s.violation_count, s.n_runs])
        worst = max(worst, int(s.violation_fraction > cfg.violation_threshold()))
        print(f"{args.param}={v}: mean baseline plays {s.mean_baseline_plays:.1f}, "
              f"mean final regret {s.mean_final_regret:.4f}, violating runs {s.violation_count}/{s.n_runs}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([args.param, "mean_baseline_plays", "mean_final_regret", "violating_runs", "runs"])
            w.writerows(rows)
    return worst


def _cmd_check(args) -> int:
    from .acceptance import run_all
    results = run_all(set(args.only) if args.only else None)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def _cmd_generate(args) -> int:
    params = dict(kv.split("=", 1) for kv in args.param)
    kwargs = {k: json.loads(v) for k, v in params.items()}
    inst = GENERATORS[args.type](seed=args.seed, **kwargs)
    text = json.dumps(instance_to_dict(inst)) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conservex", description="Conservative exploration experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--seeds", type=int, help="number of seeds")
        sp.add_argument("--base-seed", type=int, help="first seed")
        sp.add_argument("--workers", type=int, help="parallel worker processes (default: $CONSERVEX_WORKERS or 1)")

    run = sub.add_parser("run", help="run one experiment")
    common(run)
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="rerun an experiment over a list of values")
    common(sweep)
    sweep.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    sweep.add_argument("--values", required=True, nargs="+")
    sweep.set_defaults(func=_cmd_sweep)

    check = sub.add_parser("check", help="run the acceptance suite")
    check.add_argument("--only", type=int, nargs="+", metavar="N", help="criterion numbers to run")
    check.set_defaults(func=_cmd_check)

    gen = sub.add_parser("generate", help="write a random instance as JSON")
    gen.add_argument("--type", required=True, choices=sorted(GENERATORS))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--param", nargs="*", default=[], metavar="KEY=VALUE", help="generator arguments, e.g. S=5")
    gen.add_argument("--out")
    gen.set_defaults(func=_cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigLoadError, ConfigError, InfeasibleBaselineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
