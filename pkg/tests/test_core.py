import numpy as np
import pytest

from conservex.core import (BaselineSpec, RoundRecord, RunTrace, constraint_slack, constraint_violations,
                            cumulative_regret, regret_curve, slack_curve)


def trace_of(values, v_star=1.0, alpha=0.1, v0=1.0, baseline_mask=None):
    values = np.asarray(values, dtype=float)
    mask = np.zeros(len(values), bool) if baseline_mask is None else np.asarray(baseline_mask)
    return RunTrace(is_baseline=mask, action=np.full(len(values), -1), realized_reward=values,
                    true_value=values, lcb=np.full(len(values), np.nan), v_star=v_star,
                    baseline=BaselineSpec(alpha=alpha, v0=v0))


class TestBaselineSpec:
    @pytest.mark.parametrize("kwargs", [dict(alpha=-0.1, v0=1), dict(alpha=1.1, v0=1), dict(alpha=0.1, v0=-1),
                                        dict(alpha=0.1, v0=1, delta0=-0.2)])
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ValueError):
            BaselineSpec(**kwargs)

    def test_derived_quantities(self):
        b = BaselineSpec(alpha=0.2, v0=0.5, delta0=0.3)
        assert b.per_round_budget == pytest.approx(0.1)
        assert b.floor == pytest.approx(0.4)

    def test_frozen(self):
        b = BaselineSpec(alpha=0.2, v0=0.5)
        with pytest.raises(Exception):
            b.alpha = 0.3


class TestCumulativeRegret:
    def test_empty_prefix(self):
        assert cumulative_regret(trace_of([0.5, 1.0]), 0) == 0.0

    def test_hand_example(self):
        assert cumulative_regret(trace_of([0.5, 1.0], v_star=1.0), 2) == pytest.approx(0.5)

    def test_optimal_play_has_zero_regret(self):
        tr = trace_of([0.9] * 7, v_star=0.9)
        assert all(cumulative_regret(tr, t) == 0.0 for t in range(8))

    @pytest.mark.parametrize("t", [-1, 3])
    def test_out_of_range(self, t):
        with pytest.raises(IndexError):
            cumulative_regret(trace_of([0.5, 1.0]), t)

    def test_curve_matches_pointwise(self):
        tr = trace_of([0.3, 0.9, 0.1, 1.0])
        assert np.allclose(regret_curve(tr), [cumulative_regret(tr, t) for t in range(1, 5)])


class TestConstraintSlack:
    def test_all_baseline(self):
        tr = trace_of([1.0] * 5, alpha=0.1, v0=1.0, baseline_mask=[True] * 5)
        assert constraint_slack(tr, 5) == pytest.approx(0.5)

    def test_alpha_one_is_vacuous(self):
        tr = trace_of([0.0, 0.3, 0.0], alpha=1.0, v0=1.0)
        assert all(constraint_slack(tr, t) >= 0 for t in range(4))

    def test_hand_violation(self):
        tr = trace_of([0.5, 1.2], alpha=0.1, v0=1.0, v_star=1.2)
        assert constraint_slack(tr, 2) == pytest.approx(-0.1)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            constraint_slack(trace_of([0.5]), 2)


class TestViolations:
    def test_all_baseline_is_clean(self):
        tr = trace_of([1.0] * 4, baseline_mask=[True] * 4)
        assert constraint_violations(tr) == []

    def test_reports_every_violating_round(self):
        # slack is 0.5 - 0.9 = -0.4 after round 1 and -0.1 after round 2
        tr = trace_of([0.5, 1.2], alpha=0.1, v0=1.0, v_star=1.2)
        assert constraint_violations(tr) == [1, 2]

    def test_zero_slack_is_feasible(self):
        # 0.9 per round is exactly the floor
        tr = trace_of([0.9, 0.9, 0.9], alpha=0.1, v0=1.0)
        assert np.allclose(slack_curve(tr), 0.0)
        assert constraint_violations(tr) == []

    def test_tolerance_absorbs_roundoff(self):
        tr = trace_of([0.9 - 1e-12, 0.9], alpha=0.1, v0=1.0)
        assert constraint_violations(tr) == []


class TestRunTrace:
    def test_from_records_checks_indexing(self):
        b = BaselineSpec(alpha=0.1, v0=1.0)
        recs = [RoundRecord(1, "baseline", True, 1.0, 1.0), RoundRecord(3, "nc1", False, 0.5, 0.5)]
        with pytest.raises(ValueError):
            RunTrace.from_records(recs, v_star=1.0, baseline=b)

    def test_from_records_checks_baseline_value(self):
        b = BaselineSpec(alpha=0.1, v0=1.0)
        with pytest.raises(ValueError):
            RunTrace.from_records([RoundRecord(1, "baseline", True, 0.7, 0.7)], v_star=1.0, baseline=b)

    def test_v_star_must_dominate(self):
        with pytest.raises(ValueError):
            trace_of([0.5, 1.5], v_star=1.0)

    def test_record_round_trip(self):
        b = BaselineSpec(alpha=0.1, v0=1.0)
        recs = [RoundRecord(1, "baseline", True, 1.0, 1.0),
                RoundRecord(2, "nc1", False, 0.4, 0.6, lcb_at_play=0.2)]
        tr = RunTrace.from_records(recs, v_star=1.0, baseline=b)
        back = list(tr.records)
        assert back[0].is_baseline and back[0].lcb_at_play is None
        assert back[1].policy_id == "nc1" and back[1].lcb_at_play == pytest.approx(0.2)
        assert tr.n_baseline == 1

    def test_policy_ids(self):
        tr = RunTrace(is_baseline=[True, False, False], action=[-1, 2, 0], realized_reward=[1, 0, 0],
                      true_value=[1.0, 0.5, 0.5], lcb=[np.nan, 0, 0], v_star=1.0,
                      baseline=BaselineSpec(0.1, 1.0))
        assert tr.policy_ids() == ["baseline", "nc1:a2", "nc2:a0"]
