import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sportscausal.errors import (
    EmptyInputError,
    LengthMismatchError,
    RankDeficientError,
    TooFewRowsError,
)
from sportscausal.inference import aggregate_replicates, bh_adjust, ols_fit


class TestOlsFit:
    def test_exact_fit(self):
        x = np.linspace(0, 5, 12)
        design = np.column_stack([np.ones(12), x])
        y = 3.0 + 2.0 * x
        coef, se, t, p = ols_fit(design, y)
        np.testing.assert_allclose(coef, [3.0, 2.0], atol=1e-10)
        # rounding leaves RSS at machine level; "zero" means roundoff scale
        np.testing.assert_allclose(se, [0.0, 0.0], atol=1e-12)
        assert np.all(p < 1e-100)

    def test_orthogonal_regressor(self):
        rng = np.random.default_rng(10)
        z = rng.normal(size=30)
        z -= z.mean()
        y = rng.normal(size=30)
        y -= y.mean()
        y -= (y @ z) / (z @ z) * z  # force exact orthogonality
        design = np.column_stack([np.ones(30), z])
        coef, *_ = ols_fit(design, y)
        assert abs(coef[1]) < 1e-10

    def test_against_normal_equations_oracle(self):
        rng = np.random.default_rng(3)
        design = rng.normal(size=(40, 4))
        y = rng.normal(size=40)
        coef, se, t, p = ols_fit(design, y)
        # independent dense solve of X'X b = X'y
        oracle = np.linalg.solve(design.T @ design, design.T @ y)
        np.testing.assert_allclose(coef, oracle, atol=1e-8)
        resid = y - design @ oracle
        sigma2 = (resid @ resid) / (40 - 4)
        oracle_se = np.sqrt(np.diag(sigma2 * np.linalg.inv(design.T @ design)))
        np.testing.assert_allclose(se, oracle_se, atol=1e-8)

    def test_residuals_orthogonal_to_design(self):
        rng = np.random.default_rng(8)
        design = np.column_stack([np.ones(25), rng.normal(size=(25, 3))])
        y = rng.normal(size=25)
        coef, *_ = ols_fit(design, y)
        resid = y - design @ coef
        assert np.max(np.abs(design.T @ resid)) < 1e-8 * np.linalg.norm(y)

    def test_rank_deficient(self):
        x = np.linspace(1, 2, 10)
        design = np.column_stack([np.ones(10), x, 2 * x])
        with pytest.raises(RankDeficientError):
            ols_fit(design, np.arange(10.0))

    def test_too_few_rows(self):
        with pytest.raises(TooFewRowsError):
            ols_fit(np.ones((3, 3)), np.arange(3.0))


class TestBhAdjust:
    def test_handworked_stepup(self):
        np.testing.assert_allclose(
            bh_adjust([0.01, 0.02, 0.03, 0.04]), [0.04, 0.04, 0.04, 0.04]
        )

    def test_single_p(self):
        np.testing.assert_allclose(bh_adjust([0.37]), [0.37])

    def test_all_ones_capped(self):
        np.testing.assert_array_equal(bh_adjust([1.0, 1.0, 1.0]), [1.0, 1.0, 1.0])

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            bh_adjust([])

    @settings(deadline=None, max_examples=100)
    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30), st.randoms())
    def test_permutation_invariance_and_monotonicity(self, pvals, rnd):
        p = np.array(pvals)
        q = bh_adjust(p)
        perm = np.array(rnd.sample(range(p.size), p.size))
        np.testing.assert_allclose(bh_adjust(p[perm]), q[perm], atol=1e-12)
        for i in range(p.size):
            for j in range(p.size):
                if p[i] <= p[j]:
                    assert q[i] <= q[j] + 1e-12


class TestAggregateReplicates:
    def test_constant_p(self):
        s = aggregate_replicates([1.0, 2.0, 3.0], [0.5, 0.5, 0.5])
        assert s.mean_effect == 2.0
        np.testing.assert_array_equal(s.q_values, [0.5, 0.5, 0.5])
        assert s.p_value == 0.5

    def test_single_replicate_identity(self):
        s = aggregate_replicates([4.2], [0.03])
        assert s.B == 1
        assert s.mean_effect == 4.2
        assert s.p_value == 0.03
        assert s.ci_low == s.ci_high == 4.2

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            aggregate_replicates([1.0, 2.0], [0.5])

    def test_percentile_ci_against_quantile_oracle(self):
        rng = np.random.default_rng(123)
        effects = rng.normal(10, 1, 200)
        s = aggregate_replicates(effects, np.full(200, 0.2))
        assert s.ci_low < 10 < s.ci_high
        # oracle: sorting-based interpolated quantile, written out by hand
        srt = np.sort(effects)

        def quantile(q):
            pos = q * (len(srt) - 1)
            lo = int(np.floor(pos))
            hi = int(np.ceil(pos))
            w = pos - lo
            return srt[lo] * (1 - w) + srt[hi] * w

        assert abs(s.ci_low - quantile(0.025)) < 1e-10
        assert abs(s.ci_high - quantile(0.975)) < 1e-10
        # width close to the N(10,1) reference interval
        width = s.ci_high - s.ci_low
        assert abs(width - 2 * 1.96) / (2 * 1.96) < 0.2

    def test_translation_equivariance(self):
        rng = np.random.default_rng(5)
        effects = rng.normal(0, 1, 50)
        p = rng.uniform(0, 1, 50)
        base = aggregate_replicates(effects, p)
        shifted = aggregate_replicates(effects + 7.5, p)
        assert abs(shifted.mean_effect - base.mean_effect - 7.5) < 1e-12
