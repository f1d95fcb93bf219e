import json
import warnings

import pytest
from scipy import stats

from randseries import (
    ConfigError,
    ExperimentConfig,
    ScanGrid,
    Verdict,
    estimate_properties,
    parse_model,
    walk_positivity,
    wilson_interval,
    zero_one_diagnostic,
)

from .oracles import positive_walk_probability

M01 = parse_model("0,1")
M11 = parse_model("-1,1")

SMALL_GRID = ScanGrid(0.1, 0.5, 1e-3)


def small_config(model, samples=50, seed=11, threshold=5.0, workers=1):
    return ExperimentConfig(model=model, num_samples=samples, master_seed=seed,
                            grid=SMALL_GRID, threshold=threshold, eps=0.01,
                            workers=workers)


class TestWilson:
    @pytest.mark.parametrize("k,n", [(0, 10), (5, 10), (10, 10), (1999, 2000)])
    def test_matches_scipy(self, k, n):
        lo, hi = wilson_interval(k, n)
        ci = stats.binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
        assert lo == pytest.approx(ci.low, abs=1e-12)
        assert hi == pytest.approx(ci.high, abs=1e-12)

    def test_degenerate(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)


class TestConfigValidation:
    def test_rejects_k_one(self):
        with pytest.raises(ConfigError):
            parse_model("1")

    def test_rejects_bad_parameters(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(M11, 0, 1)
        with pytest.raises(ConfigError):
            ExperimentConfig(M11, 10, 1, threshold=0.0)
        with pytest.raises(ConfigError):
            ExperimentConfig(M11, 10, 1, workers=0)


class TestEstimateProperties:
    def test_counts_partition_samples(self):
        report = estimate_properties(small_config(M11))
        assert sum(report.counts.values()) + report.budget_errors == 50
        fr = sum(report.fraction(v) for v in Verdict)
        assert fr == pytest.approx(1.0, abs=1e-12)

    def test_positive_mean_diverges(self):
        report = estimate_properties(small_config(M01, threshold=10.0))
        assert report.fraction(Verdict.PLUS_INFINITY_LIKE) == 1.0

    def test_per_depth_matches_grid(self):
        report = estimate_properties(small_config(M11))
        assert len(report.depths) == len(SMALL_GRID.deltas())
        assert len(report.counts_by_depth) == len(report.depths)
        for slot in report.counts_by_depth:
            assert sum(slot.values()) == report.completed

    def test_worker_count_invisible_in_data(self):
        r1 = estimate_properties(small_config(M11, samples=40, workers=1))
        r2 = estimate_properties(small_config(M11, samples=40, workers=2))
        d1 = json.dumps(r1.data_dict(), sort_keys=True)
        d2 = json.dumps(r2.data_dict(), sort_keys=True)
        assert d1 == d2

    def test_mirrored_alphabet_swaps_plus_minus(self):
        plus = estimate_properties(small_config(parse_model("-1,1"), samples=60))
        minus = estimate_properties(small_config(parse_model("1,-1"), samples=60))
        assert plus.counts["PlusInfinityLike"] == minus.counts["MinusInfinityLike"]
        assert plus.counts["MinusInfinityLike"] == minus.counts["PlusInfinityLike"]
        assert plus.counts["OscillationLike"] == minus.counts["OscillationLike"]
        assert plus.counts["Inconclusive"] == minus.counts["Inconclusive"]

    def test_budget_errors_counted_not_fatal(self, monkeypatch):
        monkeypatch.setenv("RANDSERIES_TERM_BUDGET", "100")
        report = estimate_properties(small_config(M11, samples=5))
        assert report.budget_errors == 5
        assert report.completed == 0

    def test_histograms_cover_samples(self):
        report = estimate_properties(small_config(M11))
        for hist in (report.hist_sup, report.hist_inf):
            total = sum(c for _b, c in hist["bins"]) + hist["underflow"] + hist["overflow"]
            assert total == report.completed


class TestWalkPositivity:
    def test_bernoulli_event_is_first_coordinate(self):
        # for D = {0,1}: S_l > 0 for all l > 0 iff a_1 = 1, so p = 1/2 exactly
        config = ExperimentConfig(M01, 2000, 5, grid=SMALL_GRID)
        est = walk_positivity(config, 0, horizon=50)
        lo, hi = est.wilson_95
        assert lo <= 0.5 <= hi

    def test_monotone_in_m_per_sample(self):
        config = ExperimentConfig(M01, 500, 6, grid=SMALL_GRID)
        frac0 = walk_positivity(config, 0, horizon=100).fraction
        frac5 = walk_positivity(config, 5, horizon=100).fraction
        assert frac5 >= frac0          # identical samples, contained events

    def test_monotone_in_horizon_per_sample(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            config = ExperimentConfig(M11, 400, 6, grid=SMALL_GRID)
            short = walk_positivity(config, 0, horizon=50).fraction
            long = walk_positivity(config, 0, horizon=200).fraction
        assert long <= short           # identical samples, shrinking events

    def test_simple_walk_matches_exact_dp(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            config = ExperimentConfig(M11, 2000, 8, grid=SMALL_GRID)
            est = walk_positivity(config, 0, horizon=20)
        p_exact = float(positive_walk_probability(20, 0))
        lo, hi = est.wilson_95
        assert lo <= p_exact <= hi

    def test_zero_mean_warns(self):
        config = ExperimentConfig(M11, 10, 1, grid=SMALL_GRID)
        with pytest.warns(UserWarning):
            walk_positivity(config, 0, horizon=10)

    def test_invalid_horizon(self):
        config = ExperimentConfig(M01, 10, 1, grid=SMALL_GRID)
        with pytest.raises(ConfigError):
            walk_positivity(config, 5, horizon=5)


class TestZeroOneDiagnostic:
    def test_positive_mean_trend(self):
        config = ExperimentConfig(M01, 60, 3, grid=SMALL_GRID, threshold=5.0)
        rows = zero_one_diagnostic(config, depths=[1e-1, 1e-2, 1e-3], thresholds=[5.0])
        assert [r.depth for r in rows] == [1e-1, 1e-2, 1e-3]
        assert all(r.predicted == "PlusInfinityLike" for r in rows)
        fracs = [r.fraction for r in rows]
        assert fracs[-1] >= fracs[0]
        assert fracs[-1] == 1.0

    def test_zero_mean_predicts_oscillation(self):
        config = ExperimentConfig(M11, 40, 3, grid=SMALL_GRID, threshold=2.0)
        rows = zero_one_diagnostic(config, depths=[1e-2, 1e-3], thresholds=[2.0])
        assert all(r.predicted == "OscillationLike" for r in rows)
        assert rows[-1].fraction >= rows[0].fraction

    def test_single_depth_single_row(self):
        config = ExperimentConfig(M01, 10, 3, grid=SMALL_GRID)
        rows = zero_one_diagnostic(config, depths=[1e-2], thresholds=[5.0])
        assert len(rows) == 1

    def test_depth_shallower_than_grid_rejected(self):
        config = ExperimentConfig(M01, 10, 3, grid=SMALL_GRID)
        with pytest.raises(ConfigError):
            zero_one_diagnostic(config, depths=[0.5], thresholds=[5.0])
