import json
import math

import numpy as np
import pytest

from conservex.conservative import InfeasibleBaselineError
from conservex.environments import random_tabular, save_instance
from conservex.harness import (CSV_COLUMNS, ConfigLoadError, ExperimentConfig, aggregate, alpha_sweep, growth_ratio,
                               is_nonincreasing, load_config, rate_constant, read_run_csv, recompute_columns,
                               recount_violations, reference_curve, run_csv_name, run_experiment, run_many,
                               scaling_probe)

MAB_ENV = {"type": "mab", "means": [0.8, 0.78, 0.74, 0.68], "baseline_mean": 0.5, "noise": "gaussian"}


def cfg(**over):
    raw = {"environment": MAB_ENV, "meta": {"type": "lcbce"}, "baseline": {"alpha": 0.2, "delta0": 0.3},
           "horizon": 300, "seeds": {"base": 0, "count": 3}}
    raw.update(over)
    return ExperimentConfig.from_dict(raw)


class TestConfig:
    @pytest.mark.parametrize("raw,path", [
        ({"horizon": 0}, "horizon"),
        ({"horizon": "10"}, "horizon"),
        ({"agent": {"delta": 1.5}}, "agent.delta"),
        ({"agent": {"bonus_mode": "kl"}}, "agent.bonus_mode"),
        ({"agent": {"type": "thompson"}}, "agent.type"),
        ({"meta": {"type": "greedy"}}, "meta.type"),
        ({"meta": {"type": "lcbce", "mode": "lazy"}}, "meta.mode"),
        ({"meta": {"type": "budget_first", "C": -1}}, "meta.C"),
        ({"baseline": {"alpha": 2.0}}, "baseline.alpha"),
        ({"baseline": {}}, "baseline.alpha"),
        ({"baseline": {"alpha": 0.1, "v0": "big"}}, "baseline.v0"),
        ({"seeds": [1, 1]}, "seeds"),
        ({"seeds": {"base": 0, "count": 0}}, "seeds.count"),
        ({"environment": {"type": "pomdp"}}, "environment.type"),
        ({"environment": {"file": "missing.json"}}, "environment.file"),
    ])
    def test_errors_name_field(self, raw, path):
        with pytest.raises(ConfigLoadError) as exc:
            cfg(**raw)
        assert exc.value.path == path
        assert str(exc.value).startswith(path)

    def test_missing_required(self):
        with pytest.raises(ConfigLoadError, match="horizon"):
            ExperimentConfig.from_dict({"environment": MAB_ENV, "baseline": {"alpha": 0.1}})

    def test_load_from_file_with_instance_reference(self, tmp_path):
        save_instance(random_tabular(3, 2, 2, seed=0), tmp_path / "env.json")
        (tmp_path / "c.json").write_text(json.dumps({
            "environment": {"file": "env.json"}, "baseline": {"alpha": 0.1}, "horizon": 20, "seeds": [4, 2]}))
        c = load_config(tmp_path / "c.json")
        assert c.seeds == [4, 2]
        assert c.agent_type(c.build_environment()) == "ucbvi"

    def test_bad_json(self, tmp_path):
        (tmp_path / "c.json").write_text("{not json")
        with pytest.raises(ConfigLoadError, match="<file>"):
            load_config(tmp_path / "c.json")

    def test_resolved_records_defaults(self):
        r = cfg(meta={"type": "budget_first"}).resolved()
        assert r["meta"]["C"] == 2.0
        assert r["agent"]["delta"] == 0.1 and r["agent"]["type"] == "ucb"
        assert r["baseline"] == {"alpha": 0.2, "v0": 0.5, "delta0": 0.3}
        assert r["max_violation_fraction"] == 0.1
        json.dumps(r)

    def test_delta0_auto(self):
        c = cfg(baseline={"alpha": 0.2, "delta0": "auto"})
        assert c.build_baseline(c.build_environment()).delta0 == pytest.approx(0.3)

    def test_rate_constants(self):
        from conservex.environments import random_linear_bandit, random_low_rank
        assert rate_constant(cfg().build_environment()) == 2.0
        assert rate_constant(random_linear_bandit(5, 3, 0)) == 5.0
        assert rate_constant(random_tabular(5, 3, 4, 0)) == pytest.approx(math.sqrt(64 * 15))
        assert rate_constant(random_low_rank(4, 2, 3, 2, 0)) == pytest.approx(math.sqrt(27 * 16))


class TestRunExperiment:
    def test_meta_none_csv(self, tmp_path):
        s = run_experiment(cfg(meta={"type": "none"}, horizon=10, seeds=[0]), tmp_path)
        text = (tmp_path / run_csv_name(0)).read_bytes()
        assert b"\r" not in text
        lines = text.decode("utf-8").splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 11
        cols = read_run_csv(tmp_path / run_csv_name(0))
        assert cols["budget_accumulated"] is None and cols["deficit_sum"] is None and cols["deficit_max"] is None
        assert s.n_runs == 1

    def test_budget_first_fills_accumulated_only(self, tmp_path):
        run_experiment(cfg(meta={"type": "budget_first"}, horizon=150, seeds=[0]), tmp_path)
        cols = read_run_csv(tmp_path / run_csv_name(0))
        assert cols["budget_accumulated"] is not None and cols["deficit_sum"] is None
        assert cols["is_baseline"][:100].all() and not cols["is_baseline"][100:].any()

    def test_deterministic(self, tmp_path):
        c = cfg()
        run_experiment(c, tmp_path / "a")
        run_experiment(c, tmp_path / "b")
        for s in c.seeds:
            assert (tmp_path / "a" / run_csv_name(s)).read_bytes() == (tmp_path / "b" / run_csv_name(s)).read_bytes()
        assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()

    def test_csv_round_trip(self, tmp_path):
        c = cfg(environment={"type": "tabular", "generate": {"S": 3, "A": 2, "H": 3, "seed": 1}},
                baseline={"alpha": 0.1}, horizon=200)
        run_experiment(c, tmp_path)
        meta = json.loads((tmp_path / "summary.json").read_text())
        base = meta["config"]["baseline"]
        for run in meta["runs"]:
            cols = read_run_csv(tmp_path / run["csv"])
            rec = recompute_columns(cols, run["v_star"], base["alpha"], base["v0"])
            for k in ("cum_regret", "constraint_lhs", "constraint_rhs"):
                assert np.abs(rec[k] - cols[k]).max() <= 1e-9
            assert cols["policy_id"][0] in ("baseline", "nc1")

    def test_violation_count_recount(self, tmp_path):
        # lambda = V lets LCBCE spend the budget exactly; a tiny alpha keeps it tight
        c = cfg(agent={"lcb": "oracle"}, baseline={"alpha": 0.05, "delta0": 0.3}, seeds={"base": 0, "count": 20})
        s = run_experiment(c, tmp_path)
        assert s.violation_count == recount_violations(tmp_path)
        assert s.violation_count <= s.n_runs

    def test_recount_detects_violations(self, tmp_path):
        c = cfg(meta={"type": "none"}, baseline={"alpha": 0.0, "v0": 0.9}, horizon=50)
        s = run_experiment(c, tmp_path)
        assert s.violation_count == 3 == recount_violations(tmp_path)

    def test_aggregation_matches_independent_mean(self, tmp_path):
        c = cfg(seeds={"base": 5, "count": 4})
        s = run_experiment(c, tmp_path)
        meta = json.loads((tmp_path / "summary.json").read_text())
        regrets = np.stack([read_run_csv(tmp_path / r["csv"])["cum_regret"] for r in meta["runs"]])
        assert np.allclose(s.regret_mean, regrets.mean(axis=0), atol=1e-12)
        assert np.allclose(s.regret_quantiles[0.5], np.median(regrets, axis=0), atol=1e-12)
        assert meta["violation_count"] == s.violation_count
        assert [r["baseline_plays"] for r in meta["runs"]] == s.baseline_plays
        rows = (tmp_path / "summary.csv").read_text().splitlines()
        assert rows[0].startswith("t,regret_mean") and rows[-1].split(",")[0] == "300"

    def test_seed_isolation(self):
        a = run_many(cfg(seeds=[3, 1, 2]))
        b = run_many(cfg(seeds=[2, 3, 1]))
        by_seed = {r.seed: r for r in a}
        for r in b:
            assert np.array_equal(r.regret, by_seed[r.seed].regret)
            assert r.n_baseline == by_seed[r.seed].n_baseline
        assert [r.seed for r in b] == [2, 3, 1]

    def test_parallel_equals_serial(self):
        c = cfg(seeds={"base": 0, "count": 4})
        serial = aggregate(run_many(c, workers=1), c.seeds, c.horizon)
        par = aggregate(run_many(c, workers=2), c.seeds, c.horizon)
        assert np.array_equal(serial.regret_mean, par.regret_mean)
        assert serial.baseline_plays == par.baseline_plays

    def test_worker_env_var(self, monkeypatch):
        monkeypatch.setenv("CONSERVEX_WORKERS", "2")
        c = cfg(seeds=[0, 1])
        assert [r.seed for r in run_many(c)] == [0, 1]

    def test_infeasible_budget_first_surfaces(self):
        with pytest.raises(InfeasibleBaselineError):
            run_experiment(cfg(meta={"type": "budget_first"}, baseline={"alpha": 0.0, "delta0": 0.3}))


class TestReferenceCurve:
    def test_mab_example(self):
        p = {"A": 4, "alpha": 0.2, "mu0": 0.5, "delta0": 0.3}
        assert reference_curve("mab", p, [100])[0] == pytest.approx(50.0)
        assert reference_curve("mab", p, [100], c=2.0)[0] == pytest.approx(100.0)

    def test_zero_gap(self):
        p = {"A": 4, "alpha": 0.0, "mu0": 0.5, "delta0": 0.0}
        assert np.allclose(reference_curve("mab", p, [1, 9, 100]), [2, 6, 20])

    def test_tabular_dominates_mab(self):
        base = {"alpha": 0.2, "mu0": 0.5, "delta0": 0.3, "A": 3}
        for S, H in [(1, 1), (2, 3), (5, 4)]:
            t = np.array([1, 50, 1000])
            assert np.all(reference_curve("tabular", {**base, "S": S, "H": H}, t)
                          >= reference_curve("mab", base, t))

    def test_other_settings(self):
        p = {"alpha": 0.1, "mu0": 1.0, "delta0": 0.0, "d": 3, "H": 2}
        assert reference_curve("linear_bandit", p, [4])[0] == pytest.approx(6.0)
        assert reference_curve("low_rank", p, [1])[0] == pytest.approx(math.sqrt(27 * 16))
        assert reference_curve("low_rank", p, [1], bound="lower")[0] == pytest.approx(math.sqrt(9 * 8))

    def test_unknown_setting(self):
        with pytest.raises(ValueError):
            reference_curve("pomdp", {}, [1])


class TestProbes:
    def test_sqrt_sequence(self):
        assert growth_ratio(math.sqrt(1000), math.sqrt(4000)) == pytest.approx(2.0)

    def test_constant_sequence(self):
        assert growth_ratio(30.0, 30.0) == 1.0

    def test_nonpositive_short(self):
        with pytest.raises(ValueError):
            growth_ratio(0.0, 1.0)

    def test_scaling_probe_runs(self):
        res = scaling_probe(cfg(horizon=200), T1=200)
        assert res.T1 == 200 and res.mean_long >= res.mean_short > 0

    def test_alpha_sweep_validation(self):
        with pytest.raises(ValueError):
            alpha_sweep(cfg(), [0.2, 0.1])
        with pytest.raises(ValueError):
            alpha_sweep(cfg(), [0.0, 0.1])

    def test_alpha_one_has_no_baseline(self):
        counts = alpha_sweep(cfg(horizon=500), [0.2, 1.0])
        assert counts[1.0] == 0 and counts[0.2] > 0

    def test_nonincreasing_tolerance(self):
        assert is_nonincreasing([100, 104, 50])
        assert not is_nonincreasing([100, 106, 50])
