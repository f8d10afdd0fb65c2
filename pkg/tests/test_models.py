"""
Tests for negative binomial fitting, goodness of fit, simulation and NB GLM tests.
"""

import numpy as np
import pytest

from microstat.infrastructure.models import (
    NBParams,
    SimScenario,
    bh_adjust,
    fit_nb,
    gof_all,
    gof_nb,
    method_of_moments,
    scenario_for,
    simulate,
    simulate_with_truth,
    two_level_design,
    wald_frame,
    wald_test,
)
from microstat.infrastructure.transformers import ensure_size_factors
from microstat.shared.errors import DataValidationError, StatisticalWarning


class TestFitNb:
    """Tests for fit_nb"""

    def test_recovers_parameters(self):
        """Test that (mu, k) are recovered from a large sample."""
        rng = np.random.default_rng(1)
        counts = rng.negative_binomial(2.0, 2.0 / (2.0 + 50.0), size=4000)

        fit = fit_nb(counts, np.ones(counts.size))

        assert fit.converged
        assert fit.mu == pytest.approx(50.0, rel=0.05)
        assert fit.k == pytest.approx(2.0, rel=0.1)

    def test_size_factors_scale_the_mean(self):
        """Test that mu is per unit size factor."""
        rng = np.random.default_rng(2)
        d = np.tile([0.5, 1.0, 2.0], 1000)
        counts = rng.negative_binomial(5.0, 5.0 / (5.0 + 40.0 * d))

        fit = fit_nb(counts, d)

        assert fit.mu == pytest.approx(40.0, rel=0.05)

    def test_poisson_data_hits_the_cap(self):
        """Test that underdispersed data is flagged at the Poisson limit."""
        counts = np.array([10, 10, 10, 10, 11, 9])

        with pytest.warns(StatisticalWarning, match="Poisson limit"):
            fit = fit_nb(counts, np.ones(6))

        assert "poisson_limit" in fit.flags
        assert fit.k == pytest.approx(1e8)

    def test_all_zero_raises(self):
        """Test that all-zero counts cannot be fitted."""
        with pytest.raises(DataValidationError, match="all-zero"):
            fit_nb([0, 0, 0], [1.0, 1.0, 1.0])

    def test_too_few_observations_raise(self):
        """Test the minimum sample size."""
        with pytest.raises(ValueError, match="at least 3 observations"):
            fit_nb([1, 2], [1.0, 1.0])

    def test_method_of_moments(self):
        """Test the moment estimates with unit size factors."""
        params = method_of_moments(np.array([2, 4, 6, 8]), np.ones(4))

        # squared deviations (20) equal mu * sum(d) (20): no excess, so k is capped
        assert params.mu == pytest.approx(5.0)
        assert params.k == pytest.approx(1e8)

    def test_params_must_be_positive(self):
        """Test NBParams validation."""
        with pytest.raises(ValueError, match="k must be finite and > 0"):
            NBParams(1.0, 0.0)


class TestGoodnessOfFit:
    """Tests for gof_nb and gof_all"""

    def test_p_value_on_the_bootstrap_grid(self):
        """Test that p = (1 + r) / (n_sim + 1)."""
        rng = np.random.default_rng(4)
        counts = rng.negative_binomial(3.0, 3.0 / (3.0 + 30.0), size=60)

        result = gof_nb(counts, np.ones(60), n_sim=99, seed=5)

        assert 0 < result.p_value <= 1
        assert (result.p_value * 100) == pytest.approx(round(result.p_value * 100))

    def test_same_seed_same_result(self):
        """Test reproducibility under a fixed seed."""
        rng = np.random.default_rng(4)
        counts = rng.negative_binomial(3.0, 3.0 / (3.0 + 30.0), size=60)

        a = gof_nb(counts, np.ones(60), n_sim=50, seed=9)
        b = gof_nb(counts, np.ones(60), n_sim=50, seed=9)

        assert a == b

    def test_zero_inflated_taxon_flagged(self):
        """Test that surplus zeros beyond the NB expectation are flagged."""
        rng = np.random.default_rng(6)
        counts = rng.poisson(40.0, size=80)
        counts[:30] = 0

        result = gof_nb(counts, np.ones(80), n_sim=49, seed=1)

        assert result.zero_excess
        assert "zero_excess" in result.flags

    def test_gof_all_requires_size_factors(self, small_dataset):
        """Test that size factors must be present."""
        with pytest.raises(DataValidationError, match="needs size factors"):
            gof_all(small_dataset, n_sim=5)

    def test_gof_all_marks_failed_taxa(self, dataset_factory):
        """Test that a taxon absent from biological specimens gets a NaN row."""
        counts = np.array([[5, 9, 14, 3, 0], [0, 0, 0, 0, 12], [20, 31, 18, 25, 1]])
        dataset = ensure_size_factors(dataset_factory(counts, controls=(4,)))

        report = gof_all(dataset, n_sim=19, seed=0)
        frame = report.to_frame()

        assert list(frame["taxon_id"]) == ["T1", "T2", "T3"]
        assert np.isnan(frame.loc[1, "p_value"])
        assert frame.loc[1, "flags"].startswith("fit_failed")
        assert np.isnan(frame.loc[1, "p_adjusted"])

    def test_gof_all_independent_of_threads(self, dataset_factory):
        """Test that results do not depend on the worker count."""
        rng = np.random.default_rng(8)
        counts = rng.negative_binomial(4, 4 / (4 + 25.0), size=(4, 10)) + 1
        dataset = ensure_size_factors(dataset_factory(counts))

        serial = gof_all(dataset, n_sim=19, seed=3, threads=1).to_frame()
        parallel = gof_all(dataset, n_sim=19, seed=3, threads=4).to_frame()

        assert serial.equals(parallel)

    @pytest.mark.slow
    def test_calibrated_under_the_null(self):
        """Test that NB data rarely rejects at the 5% level."""
        rng = np.random.default_rng(12)
        rejections = 0
        for r in range(100):
            counts = rng.negative_binomial(2.0, 2.0 / (2.0 + 20.0), size=40)
            rejections += gof_nb(counts, np.ones(40), n_sim=199, seed=r).p_value <= 0.05

        assert rejections <= 12


class TestSimulator:
    """Tests for SimScenario and simulate"""

    def test_layout_and_groups(self):
        """Test specimen ids, groups, controls and size factors."""
        scenario = scenario_for([10, 20], [2, 2], (3, 2), seed=1, n_controls=2)

        dataset = simulate(scenario)

        assert dataset.specimen_ids == ("S1", "S2", "S3", "S4", "S5", "C1", "C2")
        assert dataset.metadata_column("group")[:5] == ["g1", "g1", "g1", "g2", "g2"]
        assert dataset.controls().specimen_ids == ("C1", "C2")
        assert dataset.size_factors.tolist() == [1.0] * 7

    def test_controls_receive_only_contamination(self):
        """Test that controls carry no biological reads."""
        scenario = scenario_for([100, 50], [3, 3], (4, 4), n_controls=3)

        dataset = simulate(scenario)

        assert dataset.controls().counts.counts.sum() == 0

    def test_same_seed_same_table(self):
        """Test determinism under a fixed seed."""
        scenario = scenario_for([30, 5, 60], [1, 4, 2], (5, 5), seed=42, library_model="nb")

        assert simulate(scenario) == simulate(scenario)
        assert simulate(scenario) != simulate(scenario.with_seed(43))

    def test_group_switching_moves_reads(self):
        """Test that switched specimens report taxon a's reads under b."""
        base = scenario_for([50, 50], [5, 5], (4, 4), seed=3)
        switched = scenario_for(
            [50, 50], [5, 5], (4, 4), seed=3, switch_pairs=(("taxon_1", "taxon_2"),)
        )

        plain = simulate(base).counts.counts
        data, truth = simulate_with_truth(switched)
        counts = data.counts.counts

        assert truth.switched.tolist() == [False] * 4 + [True] * 4
        np.testing.assert_array_equal(counts[1, 4:], plain[0, 4:])
        assert counts[0, 4:].sum() == 0
        assert counts[1, :4].sum() == 0

    def test_fold_change_applies_to_group_two(self):
        """Test that group 2 means are multiplied by the fold change."""
        scenario = scenario_for([20], [50], (400, 400), seed=5, fold_change=(4.0,))

        counts = simulate(scenario).counts.counts[0]

        assert counts[400:].mean() / counts[:400].mean() == pytest.approx(4.0, rel=0.1)

    def test_dict_round_trip(self):
        """Test the JSON form of a scenario."""
        scenario = scenario_for(
            [10, 20], [2, 3], (2, 3), seed=7, contamination=(0.5, 0.0), n_controls=1
        )

        assert SimScenario.from_dict(scenario.to_dict()) == scenario

    def test_unknown_key_raises(self):
        """Test that misspelled scenario keys are rejected."""
        with pytest.raises(ValueError, match="unknown scenario key"):
            SimScenario.from_dict({"mu": [1], "k": [1], "n_per_group": [2, 2], "sed": 3})

    def test_invalid_switch_pair_raises(self):
        """Test that a pair must name two distinct known taxa."""
        with pytest.raises(ValueError, match="unknown taxon 'taxon_9'"):
            scenario_for([1, 2], [1, 1], (2, 2), switch_pairs=(("taxon_1", "taxon_9"),))


class TestWaldTest:
    """Tests for the NB GLM Wald test"""

    def test_detects_shifted_taxon(self, grouped_counts):
        """Test that the shifted taxon has a large positive lfc and small p."""
        counts, groups = grouped_counts

        rows = wald_test(counts, groups, np.ones(counts.shape[1]))

        assert rows[0].lfc == pytest.approx(3.0, abs=0.8)
        assert rows[0].p_adj < 0.01
        assert all(r.p_adj > 0.001 for r in rows[1:])

    def test_all_zero_feature_is_nan(self):
        """Test that all-zero rows are excluded from the adjustment."""
        counts = np.array([[0, 0, 0, 0], [5, 7, 20, 25]])

        rows = wald_test(counts, ["a", "a", "b", "b"], np.ones(4))

        assert np.isnan(rows[0].pvalue)
        assert rows[0].flags == ("all_zero",)
        assert rows[1].p_adj == pytest.approx(rows[1].pvalue)

    def test_separation_clamped(self):
        """Test that an all-zero group clamps the lfc at 30."""
        counts = np.array([[0, 0, 0, 12, 15, 9]])

        with pytest.warns(StatisticalWarning, match="clamped"):
            rows = wald_test(counts, ["a"] * 3 + ["b"] * 3, np.ones(6))

        assert rows[0].lfc == pytest.approx(30.0)
        assert "separation" in rows[0].flags

    def test_two_levels_required(self):
        """Test the design check."""
        with pytest.raises(ValueError, match="two-level designs only"):
            two_level_design(["a", "b", "c", "c"])

    def test_small_group_rejected(self):
        """Test that each level needs two specimens."""
        with pytest.raises(ValueError, match="group 'b' has 1 specimen"):
            two_level_design(["a", "a", "b"])

    def test_swapping_labels_negates_lfc(self, grouped_counts):
        """Test that the reference level only changes the sign of the contrast."""
        counts, groups = grouped_counts
        swapped = ["b" if g == "a" else "a" for g in groups]
        d = np.linspace(0.8, 1.25, counts.shape[1])

        rows = wald_test(counts, groups, d)
        flipped = wald_test(counts, swapped, d)

        for row, other in zip(rows, flipped):
            assert other.lfc == pytest.approx(-row.lfc, abs=1e-6)
            assert other.pvalue == pytest.approx(row.pvalue, abs=1e-6)

    def test_rescaled_size_factors_change_nothing(self, grouped_counts):
        """Test that a common factor on every size factor is absorbed by the intercept."""
        counts, groups = grouped_counts
        d = np.linspace(0.8, 1.25, counts.shape[1])

        rows = wald_test(counts, groups, d)
        rescaled = wald_test(counts, groups, 3.7 * d)

        for row, other in zip(rows, rescaled):
            assert other.lfc == pytest.approx(row.lfc, abs=1e-6)
            assert other.pvalue == pytest.approx(row.pvalue, abs=1e-6)

    def test_identical_groups(self):
        """Test lfc = 0 and p = 1 when both groups hold the same counts."""
        counts = np.array([[5, 9, 12, 7, 5, 9, 12, 7], [40, 22, 31, 18, 40, 22, 31, 18]])

        rows = wald_test(counts, ["a"] * 4 + ["b"] * 4, np.ones(8))

        for row in rows:
            assert row.lfc == pytest.approx(0.0, abs=1e-6)
            assert row.pvalue == pytest.approx(1.0, abs=1e-6)

    def test_recovers_planted_two_fold_change(self):
        """Test the mean estimated lfc for a doubled mean (mu = 100, k = 10, 20 per group)."""
        rng = np.random.default_rng(23)
        means = np.r_[np.full(20, 100.0), np.full(20, 200.0)]
        counts = rng.negative_binomial(10.0, 10.0 / (10.0 + means), size=(60, 40))

        rows = wald_test(counts, ["a"] * 20 + ["b"] * 20, np.ones(40))

        assert np.mean([r.lfc for r in rows]) == pytest.approx(1.0, abs=0.2)

    @pytest.mark.slow
    def test_false_discovery_rate_is_controlled(self):
        """Test the false discovery proportion among null and four-fold shifted features."""
        rng = np.random.default_rng(29)
        n_null = 1000
        means = np.full((2000, 20), 100.0)
        means[n_null:, 10:] *= 4.0
        counts = rng.negative_binomial(10.0, 10.0 / (10.0 + means))

        rows = wald_test(counts, ["a"] * 10 + ["b"] * 10, np.ones(20))

        rejected = np.array([r.p_adj <= 0.05 for r in rows])
        assert rejected[:n_null].sum() / max(rejected.sum(), 1) <= 0.07
        assert rejected[n_null:].mean() > 0.9

    def test_frame_columns(self, grouped_counts):
        """Test the result table layout."""
        counts, groups = grouped_counts

        frame = wald_frame(wald_test(counts, groups, np.ones(12)), id_column="taxon_id")

        assert list(frame.columns[:7]) == [
            "taxon_id", "baseMean", "lfc", "lfcSE", "WTS", "pvalue", "p.adj"
        ]

    def test_bh_adjust_keeps_nan(self):
        """Test BH adjustment leaves NaN entries out."""
        adjusted = bh_adjust([0.01, np.nan, 0.04])

        assert np.isnan(adjusted[1])
        np.testing.assert_allclose(adjusted[[0, 2]], [0.02, 0.04])
