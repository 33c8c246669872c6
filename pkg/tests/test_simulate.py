import numpy as np
import pytest

from sportscausal.errors import InvalidConfigError, InvalidFractionError
from sportscausal.simulate import SimConfig, fraction_sweep, gen_experiment


class TestGenExperiment:
    def test_noiseless_null_is_flat(self):
        cfg = SimConfig(m=3, n=2, t0=4, t_post=3, baseline=100.0, noise_sd=0.0,
                        direct_effect=0.0, spillover_effect=0.0, seed=1)
        panel, truth = gen_experiment(cfg)
        np.testing.assert_array_equal(panel.outcomes, np.full((5, 7), 100.0))
        assert truth == {"direct_effect": 0.0, "spillover_effect": 0.0}

    def test_noiseless_effects_are_exact_steps(self):
        cfg = SimConfig(m=2, n=2, t0=3, t_post=2, baseline=50.0, noise_sd=0.0,
                        direct_effect=10.0, spillover_effect=-5.0, seed=0)
        panel, _ = gen_experiment(cfg)
        treated = panel.outcomes[panel.treated_mask]
        control = panel.outcomes[panel.control_mask]
        np.testing.assert_array_equal(treated[:, 3:], np.full((2, 2), 60.0))
        np.testing.assert_array_equal(control[:, 3:], np.full((2, 2), 45.0))
        np.testing.assert_array_equal(panel.outcomes[:, :3], np.full((4, 3), 50.0))

    def test_ramp(self):
        cfg = SimConfig(m=1, n=1, t0=2, t_post=4, baseline=0.0, noise_sd=0.0,
                        direct_effect=8.0, ramp_length=4, seed=0)
        panel, _ = gen_experiment(cfg)
        treated_row = panel.outcomes[panel.treated_mask][0]
        np.testing.assert_allclose(treated_row, [0, 0, 2, 4, 6, 8])

    def test_determinism(self):
        cfg = SimConfig(m=10, n=10, t0=8, t_post=4, seed=33)
        p1, _ = gen_experiment(cfg)
        p2, _ = gen_experiment(cfg)
        np.testing.assert_array_equal(p1.outcomes, p2.outcomes)
        assert np.array_equal(p1.treatment, p2.treatment)

    def test_did_identity(self):
        # difference-in-differences on the generator recovers d
        cfg = SimConfig(m=200, n=200, t0=40, t_post=50, baseline=100.0,
                        ar_coefficient=0.5, noise_sd=1.0, direct_effect=10.0,
                        spillover_effect=0.0, seed=7)
        panel, _ = gen_experiment(cfg)
        tr = panel.outcomes[panel.treated_mask]
        co = panel.outcomes[panel.control_mask]
        did = (tr[:, 40:].mean() - tr[:, :40].mean()) - (
            co[:, 40:].mean() - co[:, :40].mean())
        assert abs(did - 10.0) < 0.5

    def test_acyclicity_control_untouched_by_d(self):
        # changing the direct effect never changes a control cell
        base = dict(m=20, n=20, t0=10, t_post=10, noise_sd=1.5,
                    spillover_effect=-4.0, seed=12)
        p0, _ = gen_experiment(SimConfig(direct_effect=0.0, **base))
        p7, _ = gen_experiment(SimConfig(direct_effect=7.0, **base))
        assert np.array_equal(p0.treatment, p7.treatment)
        np.testing.assert_array_equal(
            p0.outcomes[p0.control_mask], p7.outcomes[p7.control_mask]
        )
        # and the treated differ only after t0
        np.testing.assert_array_equal(
            p0.outcomes[p0.treated_mask][:, :10], p7.outcomes[p7.treated_mask][:, :10]
        )

    def test_spillover_moves_control_by_fixed_term(self):
        base = dict(m=5, n=5, t0=6, t_post=4, noise_sd=1.0, direct_effect=3.0, seed=4)
        p_null, _ = gen_experiment(SimConfig(spillover_effect=0.0, **base))
        p_spill, _ = gen_experiment(SimConfig(spillover_effect=-2.0, **base))
        diff = p_spill.outcomes[p_spill.control_mask] - p_null.outcomes[p_null.control_mask]
        np.testing.assert_allclose(diff[:, :6], 0.0, atol=1e-12)
        np.testing.assert_allclose(diff[:, 6:], -2.0, atol=1e-12)

    def test_pre_period_balance_without_confounding(self):
        # two-sample t on pre-period means: |t| < 3 in at least 95 of 100 runs
        hits = 0
        for seed in range(100):
            cfg = SimConfig(m=50, n=50, t0=20, t_post=5, noise_sd=1.0, seed=seed)
            panel, _ = gen_experiment(cfg)
            pre = panel.outcomes[:, :20].mean(axis=1)
            a = pre[panel.treated_mask]
            b = pre[panel.control_mask]
            se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
            if abs(a.mean() - b.mean()) / se < 3.0:
                hits += 1
        assert hits >= 95

    def test_lag1_autocorrelation_matches_phi(self):
        cfg = SimConfig(m=2, n=1, t0=600, t_post=5, ar_coefficient=0.6,
                        noise_sd=1.0, seed=3)
        panel, _ = gen_experiment(cfg)
        row = panel.outcomes[panel.control_mask][0, :600]
        x = row - row.mean()
        rho = (x[1:] @ x[:-1]) / (x @ x)
        assert abs(rho - 0.6) < 0.1

    def test_confounded_assignment_and_features(self):
        cfg = SimConfig(m=100, n=100, t0=10, t_post=5, confounder_strength=1.0, seed=9)
        panel, _ = gen_experiment(cfg)
        assert panel.n_features == 1
        z = panel.features[:, 0]
        # the confounder tilts assignment toward high z
        assert z[panel.treated_mask].mean() > z[panel.control_mask].mean() + 0.3

    def test_invalid_configs(self):
        with pytest.raises(InvalidConfigError):
            SimConfig(m=0)
        with pytest.raises(InvalidConfigError):
            SimConfig(ar_coefficient=1.0)
        with pytest.raises(InvalidConfigError):
            SimConfig(noise_sd=-1.0)
        with pytest.raises(InvalidConfigError):
            SimConfig(seed=-1)


class TestFractionSweep:
    def test_zero_conservation_means_zero_spillover(self):
        base = SimConfig(m=50, n=50, t0=10, t_post=5, direct_effect=10.0, seed=2)
        for rho, panel, truth in fraction_sweep(base, [0.1, 0.3, 0.7], 0.0):
            assert truth["spillover_effect"] == 0.0

    def test_half_fraction_unit_ratio(self):
        base = SimConfig(m=50, n=50, t0=10, t_post=5, direct_effect=10.0, seed=2)
        (_, _, truth), = fraction_sweep(base, [0.5], 1.0)
        assert truth["spillover_effect"] == -10.0

    def test_small_fraction_arithmetic(self):
        # N=400, rho=0.05: s = -10 * 20/380
        base = SimConfig(m=200, n=200, t0=10, t_post=5, direct_effect=10.0, seed=2)
        (_, panel, truth), = fraction_sweep(base, [0.05], 1.0)
        assert panel.treated_mask.sum() == 20
        assert panel.control_mask.sum() == 380
        assert abs(truth["spillover_effect"] - (-10.0 * 20 / 380)) < 1e-12

    def test_invalid_fraction(self):
        base = SimConfig(m=5, n=5, t0=4, t_post=2, seed=0)
        with pytest.raises(InvalidFractionError):
            fraction_sweep(base, [0.0], 1.0)
        with pytest.raises(InvalidFractionError):
            fraction_sweep(base, [0.01], 1.0)  # rounds to an empty arm
