import numpy as np
import pytest

from sportscausal.errors import RankDeficientError, TooShortPrePeriodError
from sportscausal.estimators import (
    ancova,
    bootstrap_matching_estimate,
    causal_impact,
    sports_causal,
)
from sportscausal.panel import GroupSeries, aggregate_groups
from sportscausal.simulate import SimConfig, gen_experiment
from sportscausal.timeseries import StateSpaceSpec

from conftest import make_panel

REG_SPEC = StateSpaceSpec(use_regression=True)


class TestAncova:
    def test_null_effect_exact(self):
        rng = np.random.default_rng(0)
        pre = rng.normal(10, 2, (20, 3))
        outcomes = np.hstack([pre, pre])  # post means equal pre means
        d = (rng.random(20) < 0.5).astype(int)
        d[0], d[1] = 0, 1
        est = ancova(make_panel(outcomes, d, 3))
        assert abs(est.effect) < 1e-10

    def test_exact_additive_effect(self):
        rng = np.random.default_rng(1)
        pre = rng.normal(0, 1, (30, 4))
        d = np.array([0, 1] * 15)
        post = pre + 5.0 * d[:, None]
        est = ancova(make_panel(np.hstack([pre, post]), d, 4))
        assert abs(est.effect - 5.0) < 1e-9
        assert est.std_error < 1e-9
        assert est.ci_low <= est.effect <= est.ci_high

    def test_simulator_oracle(self):
        effects = []
        for seed in range(20):
            cfg = SimConfig(m=100, n=100, t0=30, t_post=15, noise_sd=1.0,
                            direct_effect=10.0, seed=seed)
            panel, _ = gen_experiment(cfg)
            effects.append(ancova(panel).effect)
        assert abs(np.mean(effects) - 10.0) < 0.5

    def test_rank_deficient_feature(self):
        rng = np.random.default_rng(2)
        outcomes = rng.normal(size=(12, 4))
        features = np.ones((12, 1))  # duplicates the intercept
        d = np.array([0, 1] * 6)
        with pytest.raises(RankDeficientError):
            ancova(make_panel(outcomes, d, 2, features))


class TestBootstrapMatching:
    def test_single_replicate_identity(self):
        rng = np.random.default_rng(3)
        pre = rng.normal(5, 1, (40, 5))
        d = np.array([0, 1] * 20)
        post = pre + 2.0 * d[:, None] + rng.normal(0, 0.1, (40, 5))
        panel = make_panel(np.hstack([pre, post]), d, 5)
        s = bootstrap_matching_estimate(panel, B=1, seed=11)
        assert s.B == 1
        assert s.mean_effect == s.replicate_effects[0]
        assert s.p_value == s.replicate_pvalues[0]
        np.testing.assert_array_equal(s.q_values, s.replicate_pvalues)

    def test_worker_count_invariance(self):
        cfg = SimConfig(m=60, n=40, t0=10, t_post=5, noise_sd=1.0,
                        direct_effect=4.0, confounder_strength=1.0, seed=5)
        panel, _ = gen_experiment(cfg)
        s1 = bootstrap_matching_estimate(panel, B=24, seed=9, workers=1)
        s2 = bootstrap_matching_estimate(panel, B=24, seed=9, workers=3)
        np.testing.assert_array_equal(s1.replicate_effects, s2.replicate_effects)
        np.testing.assert_array_equal(s1.replicate_pvalues, s2.replicate_pvalues)
        assert s1.mean_effect == s2.mean_effect

    def test_recovers_truth_without_confounding(self):
        cfg = SimConfig(m=80, n=80, t0=20, t_post=10, noise_sd=1.0,
                        direct_effect=6.0, seed=21)
        panel, _ = gen_experiment(cfg)
        s = bootstrap_matching_estimate(panel, B=60, seed=2)
        assert abs(s.mean_effect - 6.0) < 1.0
        assert s.n_failed == 0


class TestCausalImpact:
    def test_exact_step(self):
        rng = np.random.default_rng(7)
        control = 50 + np.sin(np.arange(40) / 3.0) * 4 + rng.normal(0, 1, 40)
        treated = control.copy()
        treated[30:] += 8.0
        series = GroupSeries(control=control, treated=treated, t0=30)
        result = causal_impact(series, REG_SPEC)
        assert abs(result.estimate.effect - 8.0) < 1e-6
        assert abs(result.cumulative_effect - 10 * result.estimate.effect) < 1e-9
        assert abs(result.relative_effect - 8.0 / np.mean(result.counterfactual.mean)) < 1e-12

    def test_null_case_identical_series(self):
        # treated equals control exactly: a beta = 1 world with no effect
        rng = np.random.default_rng(4)
        base = 100 + np.cumsum(rng.normal(0, 0.3, 50)) + rng.normal(0, 1, 50)
        series = GroupSeries(control=base, treated=base.copy(), t0=35)
        result = causal_impact(series, REG_SPEC)
        assert abs(result.estimate.effect) <= max(
            2 * result.estimate.std_error, 1e-6
        )

    def test_spillover_shows_up_as_sum(self):
        # contaminated control makes the vanilla impact read d + |s|
        effects = []
        for seed in range(5):
            cfg = SimConfig(m=100, n=100, t0=60, t_post=30, noise_sd=1.0,
                            direct_effect=10.0, spillover_effect=-5.0, seed=seed)
            panel, _ = gen_experiment(cfg)
            effects.append(causal_impact(aggregate_groups(panel), REG_SPEC).estimate.effect)
        assert abs(np.mean(effects) - 15.0) < 1.5

    def test_shift_equivariance(self):
        cfg = SimConfig(m=50, n=50, t0=30, t_post=10, noise_sd=1.0,
                        direct_effect=5.0, seed=13)
        panel, _ = gen_experiment(cfg)
        g = aggregate_groups(panel)
        base = causal_impact(g, REG_SPEC).estimate.effect
        shifted = GroupSeries(control=g.control + 500.0, treated=g.treated + 500.0, t0=g.t0)
        eff = causal_impact(shifted, REG_SPEC).estimate.effect
        assert abs(eff - base) < 1e-3 * (1 + abs(base))

    def test_scale_equivariance(self):
        cfg = SimConfig(m=50, n=50, t0=30, t_post=10, noise_sd=1.0,
                        direct_effect=5.0, seed=14)
        panel, _ = gen_experiment(cfg)
        g = aggregate_groups(panel)
        base = causal_impact(g, REG_SPEC).estimate.effect
        scaled = GroupSeries(control=3.0 * g.control, treated=3.0 * g.treated, t0=g.t0)
        eff = causal_impact(scaled, REG_SPEC).estimate.effect
        assert abs(eff - 3.0 * base) < 1e-6 * (1 + abs(base))

    def test_too_short_pre_period(self):
        series = GroupSeries(control=np.arange(6.0), treated=np.arange(6.0), t0=4)
        with pytest.raises(TooShortPrePeriodError):
            causal_impact(series, REG_SPEC)


class TestSportsCausal:
    def test_no_spillover_correction_is_noop(self):
        vans, cors = [], []
        for seed in range(5):
            cfg = SimConfig(m=100, n=100, t0=60, t_post=30, noise_sd=1.0,
                            direct_effect=10.0, spillover_effect=0.0, seed=seed)
            panel, _ = gen_experiment(cfg)
            r = sports_causal(panel, REG_SPEC, ar_max_order=5, B=1, seed=seed)
            vans.append(r.vanilla.estimate.effect)
            cors.append(r.corrected.estimate.effect)
        assert abs(np.mean(vans) - np.mean(cors)) < 1.0
        assert abs(np.mean(cors) - 10.0) < 1.0

    def test_spillover_corrected(self):
        gaps, cors = [], []
        for seed in range(5):
            cfg = SimConfig(m=100, n=100, t0=60, t_post=30, noise_sd=1.0,
                            direct_effect=10.0, spillover_effect=-5.0, seed=seed)
            panel, _ = gen_experiment(cfg)
            r = sports_causal(panel, REG_SPEC, ar_max_order=5, B=1, seed=seed)
            gaps.append(r.spillover_gap)
            cors.append(r.corrected.estimate.effect)
        assert abs(np.mean(cors) - 10.0) < 1.5
        assert abs(np.mean(gaps) - 5.0) < 1.5

    def test_zero_noise_correction_exact(self):
        cfg = SimConfig(m=10, n=10, t0=12, t_post=6, noise_sd=0.0,
                        direct_effect=10.0, spillover_effect=0.0, seed=0)
        panel, _ = gen_experiment(cfg)
        r = sports_causal(panel, REG_SPEC, ar_max_order=3, B=1, seed=0)
        assert r.vanilla.estimate.effect == r.corrected.estimate.effect
        np.testing.assert_array_equal(
            r.control_counterfactual.mean,
            aggregate_groups(panel).control[panel.t0:],
        )

    def test_too_short_for_ar(self):
        cfg = SimConfig(m=10, n=10, t0=6, t_post=4, noise_sd=1.0, seed=0)
        panel, _ = gen_experiment(cfg)
        with pytest.raises(TooShortPrePeriodError):
            sports_causal(panel, REG_SPEC, ar_max_order=5, B=1, seed=0)

    def test_bootstrap_summary_present(self):
        cfg = SimConfig(m=40, n=40, t0=20, t_post=8, noise_sd=1.0,
                        direct_effect=10.0, spillover_effect=-3.0, seed=6)
        panel, _ = gen_experiment(cfg)
        r = sports_causal(panel, REG_SPEC, ar_max_order=3, B=8, seed=6)
        assert r.bootstrap is not None
        assert r.bootstrap.B + r.bootstrap.n_failed == 8
        assert abs(r.bootstrap.mean_effect - 10.0) < 2.5

    def test_worker_count_invariance(self):
        cfg = SimConfig(m=40, n=40, t0=20, t_post=8, noise_sd=1.0,
                        direct_effect=10.0, spillover_effect=-3.0, seed=6)
        panel, _ = gen_experiment(cfg)
        r1 = sports_causal(panel, REG_SPEC, ar_max_order=3, B=6, seed=6, workers=1)
        r2 = sports_causal(panel, REG_SPEC, ar_max_order=3, B=6, seed=6, workers=3)
        np.testing.assert_array_equal(
            r1.bootstrap.replicate_effects, r2.bootstrap.replicate_effects
        )
        assert r1.corrected.estimate.effect == r2.corrected.estimate.effect
