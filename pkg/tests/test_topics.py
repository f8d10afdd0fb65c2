"""
Tests for the LDA sampler, chain alignment, diagnostics, predictive checks,
differential topics, fit documents and the held-out scan.
"""

import itertools
import json

import numpy as np
import pytest

from microstat.core.count_table import CountTable
from microstat.infrastructure.topics import (
    CollapsedGibbsLda,
    LdaSpec,
    TopicFit,
    align_chains,
    diagnostics,
    differential_topics,
    ess_bulk,
    fit_from_payload,
    fit_lda,
    fit_to_payload,
    gibbs_sweep,
    grouped_sweep,
    heldout_log_likelihood,
    holdout_split,
    joint_log_likelihood,
    match_topics,
    posterior_predictive_check,
    scan_topics,
    split_rhat,
    top_taxa_frame,
    topic_counts,
    topic_proportions_frame,
)
from microstat.infrastructure.topics.differential import DIFFERENTIAL_COLUMNS
from microstat.shared.errors import DataValidationError, NumericalError, StatisticalWarning

ALPHA, GAMMA = 0.8, 0.5


def _counts_from_z(z, docs, words, n_docs, n_words, n_topics):
    n_jt = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_tw = np.zeros((n_topics, n_words), dtype=np.int64)
    np.add.at(n_jt, (docs, z), 1)
    np.add.at(n_tw, (z, words), 1)
    return n_jt, n_tw, np.bincount(z, minlength=n_topics).astype(np.int64)


def _exact_posterior(docs, words, n_docs, n_words, n_topics):
    """Posterior over every assignment vector, from the collapsed joint."""
    states = list(itertools.product(range(n_topics), repeat=len(docs)))
    log_p = []
    for state in states:
        z = np.array(state, dtype=np.int64)
        log_p.append(
            joint_log_likelihood(
                *_counts_from_z(z, docs, words, n_docs, n_words, n_topics), ALPHA, GAMMA
            )
        )
    p = np.exp(np.array(log_p) - max(log_p))
    return states, p / p.sum()


def _synthetic_fit(theta, beta, library_sizes, taxa=None, specimens=None, spec=None):
    theta = np.asarray(theta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    chains, draws, n, t = theta.shape
    m = beta.shape[3]
    return TopicFit(
        taxa_ids=tuple(taxa or [f"T{i + 1}" for i in range(m)]),
        specimen_ids=tuple(specimens or [f"S{j + 1}" for j in range(n)]),
        spec=spec or LdaSpec(T=t, chains=chains, iters=draws + 1, warmup=1),
        library_sizes=np.asarray(library_sizes, dtype=np.int64),
        theta=theta,
        beta=beta,
        log_likelihood=np.zeros((chains, draws + 1)),
        permutations=np.tile(np.arange(t, dtype=np.int64), (chains, 1)),
    )


@pytest.fixture
def planted_counts():
    """Ten specimens drawn from two topics over disjoint taxon sets."""
    rng = np.random.default_rng(17)
    topics = np.array([[0.4, 0.3, 0.3, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.3, 0.3, 0.4]])
    columns = []
    for j in range(10):
        weights = [0.9, 0.1] if j < 5 else [0.1, 0.9]
        columns.append(rng.multinomial(200, weights @ topics))
    counts = np.array(columns).T
    return CountTable([f"T{i + 1}" for i in range(6)], [f"S{j + 1}" for j in range(10)], counts)


class TestGibbsKernels:
    """Tests for the collapsed Gibbs kernels against an exact posterior"""

    def test_token_sweep_matches_enumeration(self):
        """Test that visit frequencies of the token sampler match the exact posterior."""
        docs = np.array([0, 0, 1], dtype=np.int64)
        words = np.array([0, 1, 1], dtype=np.int64)
        states, exact = _exact_posterior(docs, words, 2, 2, 2)
        index = {s: i for i, s in enumerate(states)}

        z = np.zeros(3, dtype=np.int64)
        n_jt, n_tw, n_t = _counts_from_z(z, docs, words, 2, 2, 2)
        rng = np.random.default_rng(0)
        visits = np.zeros(len(states))
        for sweep in range(30_100):
            gibbs_sweep(z, docs, words, n_jt, n_tw, n_t, ALPHA, GAMMA, rng.random(3))
            if sweep >= 100:
                visits[index[tuple(z)]] += 1

        np.testing.assert_allclose(visits / visits.sum(), exact, atol=0.015)

    def test_grouped_sweep_matches_enumeration(self):
        """Test that the per-cell sampler targets the same posterior."""
        docs = np.array([0, 0, 1], dtype=np.int64)
        words = np.array([0, 0, 1], dtype=np.int64)
        states, exact = _exact_posterior(docs, words, 2, 2, 2)
        # per-cell topic-0 counts: cell (0, 0) holds tokens 0-1, cell (1, 1) token 2
        cell_exact = {}
        for state, p in zip(states, exact):
            key = (2 - state[0] - state[1], 1 - state[2])
            cell_exact[key] = cell_exact.get(key, 0.0) + p

        cell_doc = np.array([0, 1], dtype=np.int64)
        cell_word = np.array([0, 1], dtype=np.int64)
        cell_count = np.array([2, 1], dtype=np.int64)
        cell_topic = np.array([[2, 0], [1, 0]], dtype=np.int64)
        n_jt = np.array([[2, 0], [1, 0]], dtype=np.int64)
        n_tw = np.array([[2, 1], [0, 0]], dtype=np.int64)
        n_t = np.array([3, 0], dtype=np.int64)
        rng = np.random.default_rng(1)
        visits = {key: 0 for key in cell_exact}
        for sweep in range(30_100):
            grouped_sweep(
                cell_doc, cell_word, cell_count, cell_topic, n_jt, n_tw, n_t,
                ALPHA, GAMMA, rng.random(6),
            )
            if sweep >= 100:
                visits[(int(cell_topic[0, 0]), int(cell_topic[1, 0]))] += 1

        for key, p in cell_exact.items():
            assert visits[key] / 30_000 == pytest.approx(p, abs=0.015)


class TestFitLda:
    """Tests for fit_lda and CollapsedGibbsLda"""

    def test_draws_lie_on_the_simplex(self, planted_counts):
        """Test shapes and that theta and beta rows sum to one."""
        spec = LdaSpec(T=2, chains=2, iters=60, warmup=30, seed=1)

        fit = fit_lda(planted_counts, spec)

        assert fit.theta.shape == (2, 30, 10, 2)
        assert fit.beta.shape == (2, 30, 2, 6)
        np.testing.assert_allclose(fit.theta.sum(axis=3), 1.0)
        np.testing.assert_allclose(fit.beta.sum(axis=3), 1.0)
        assert fit.log_likelihood.shape == (2, 60)
        assert fit.aligned

    def test_recovers_planted_topics(self, planted_counts):
        """Test that each topic concentrates on one taxon set in every chain."""
        spec = LdaSpec(T=2, chains=2, iters=300, warmup=150, seed=0)

        fit = fit_lda(planted_counts, spec)

        for chain in range(2):
            beta = fit.beta[chain].mean(axis=0)
            first_set = beta[:, :3].sum(axis=1)
            assert sorted(np.round(first_set)) == [0.0, 1.0]
        np.testing.assert_allclose(
            fit.beta[0].mean(axis=0), fit.beta[1].mean(axis=0), atol=0.05
        )
        assert fit.convergence is not None

    def test_same_seed_same_draws(self, planted_counts):
        """Test reproducibility, including across worker counts."""
        spec = LdaSpec(T=3, chains=2, iters=20, warmup=10, seed=4)

        a = fit_lda(planted_counts, spec, threads=1)
        b = fit_lda(planted_counts, spec, threads=2)

        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.beta, b.beta)

    def test_grouped_sampler_above_token_limit(self, planted_counts):
        """Test that large corpora switch to per-cell sampling."""
        spec = LdaSpec(T=2, chains=2, iters=20, warmup=10)

        fit = fit_lda(planted_counts, spec, max_tokens=100)

        assert "grouped_sampling" in fit.flags
        np.testing.assert_allclose(fit.theta.sum(axis=3), 1.0)

    def test_single_chain_is_flagged(self, planted_counts):
        """Test that one chain skips alignment with a warning."""
        spec = LdaSpec(T=2, chains=1, iters=10, warmup=5)

        with pytest.warns(StatisticalWarning, match="single chain"):
            fit = fit_lda(planted_counts, spec)

        assert "single_chain" in fit.flags
        assert not fit.aligned

    def test_empty_specimen_raises(self):
        """Test that every specimen needs tokens."""
        counts = CountTable(["a", "b"], ["S1", "S2"], np.array([[3, 0], [4, 0]]))

        with pytest.raises(DataValidationError, match="'S2' has no reads"):
            fit_lda(counts, LdaSpec(T=2, iters=10, warmup=5))

    def test_too_many_topics_raise(self):
        """Test that T must be below the token count."""
        counts = CountTable(["a"], ["S1"], np.array([[3]]))

        with pytest.raises(DataValidationError, match="T=3 must be smaller"):
            fit_lda(counts, LdaSpec(T=3, iters=10, warmup=5))

    def test_spec_validation(self):
        """Test the settings checks."""
        with pytest.raises(ValueError, match="warmup \\(10\\) must be smaller than iters"):
            LdaSpec(T=2, iters=10, warmup=10)

    def test_model_drops_controls(self, small_dataset):
        """Test that the model fits biological specimens only by default."""
        model = CollapsedGibbsLda(LdaSpec(T=2, chains=2, iters=10, warmup=5))

        fit = model.fit(small_dataset)

        assert fit.specimen_ids == ("S1", "S2", "S3", "S4")


class TestAlignment:
    """Tests for topic matching and chain alignment"""

    def test_cyclic_shift_is_undone(self):
        """Test that a relabelled copy is matched back."""
        rng = np.random.default_rng(2)
        reference = rng.dirichlet(np.ones(8), size=3)

        perm = match_topics(reference, reference[[1, 2, 0]])

        assert perm.tolist() == [2, 0, 1]

    def test_constant_topic_raises(self):
        """Test that correlation with a flat topic is rejected."""
        reference = np.array([[0.5, 0.5], [0.9, 0.1]])

        with pytest.raises(NumericalError, match="constant distribution"):
            match_topics(reference, reference)

    def test_align_chains_relabels_second_chain(self):
        """Test that chain 2's draws are permuted onto chain 1's labels."""
        rng = np.random.default_rng(3)
        beta = rng.dirichlet(np.ones(5), size=3)
        theta = rng.dirichlet(np.ones(3), size=4)
        shift = [2, 0, 1]
        fit = _synthetic_fit(
            theta=np.stack([np.tile(theta, (2, 1, 1)), np.tile(theta[:, shift], (2, 1, 1))]),
            beta=np.stack([np.tile(beta, (2, 1, 1)), np.tile(beta[shift], (2, 1, 1))]),
            library_sizes=[10, 10, 10, 10],
        )

        aligned = align_chains(fit)

        np.testing.assert_array_equal(aligned.beta[1], aligned.beta[0])
        np.testing.assert_array_equal(aligned.theta[1], aligned.theta[0])
        assert aligned.permutations[1].tolist() == [1, 2, 0]
        assert aligned.aligned

    def test_noisy_relabelled_copies_are_matched(self):
        """Test that permuted topics with small perturbations are matched back."""
        rng = np.random.default_rng(12)
        hits = 0

        for _ in range(200):
            reference = rng.dirichlet(np.ones(12), size=4)
            shift = rng.permutation(4)
            noisy = reference[shift] + rng.normal(0.0, 0.01, size=reference.shape)
            hits += match_topics(reference, noisy).tolist() == np.argsort(shift).tolist()

        assert hits >= 190

    def test_two_topics_greedy_is_optimal(self):
        """Test that with two topics the greedy matching maximises the summed correlation."""
        rng = np.random.default_rng(13)

        for _ in range(200):
            reference = rng.dirichlet(np.ones(20), size=2)
            candidate = reference[rng.permutation(2)] + rng.normal(0.0, 0.02, size=(2, 20))
            corr = np.corrcoef(reference, candidate)[:2, 2:]
            best = max(([0, 1], [1, 0]), key=lambda p: corr[0, p[0]] + corr[1, p[1]])

            assert match_topics(reference, candidate).tolist() == best


class TestDiagnostics:
    """Tests for split-R-hat, bulk ESS and the diagnostics table"""

    def test_iid_chains(self):
        """Test R-hat near one and ESS near the draw count for independent draws."""
        draws = np.random.default_rng(4).normal(size=(4, 1000, 3))

        assert np.all(split_rhat(draws) < 1.01)
        assert np.all(ess_bulk(draws) > 3000)

    def test_constant_draws_are_undefined(self):
        """Test that identical constant chains give NaN."""
        assert np.isnan(split_rhat(np.ones((4, 100, 1))))[0]

    def test_chains_at_different_constants_diverge(self):
        """Test that stuck chains give an infinite R-hat."""
        draws = np.arange(4.0)[:, None, None] * np.ones((4, 100, 1))

        assert np.isinf(split_rhat(draws))[0]

    def test_two_chains_at_zero_and_one_diverge(self):
        """Test that rounding in the within-chain variance is not mistaken for mixing."""
        draws = np.stack([np.zeros((50, 1)), np.ones((50, 1))])

        assert np.isinf(split_rhat(draws))[0]

    def test_table_layout(self):
        """Test the per-parameter table of a synthetic fit."""
        rng = np.random.default_rng(5)
        theta = rng.dirichlet(np.ones(2), size=(2, 8, 3))
        beta = rng.dirichlet(np.ones(4), size=(2, 8, 2))
        fit = _synthetic_fit(theta, beta, [5, 5, 5])

        frame = diagnostics(fit)

        assert list(frame.columns) == [
            "parameter", "mean", "q5", "q50", "q95", "rhat", "ess_bulk", "flags"
        ]
        assert len(frame) == 3 * 2 + 2 * 4
        assert frame["parameter"].iloc[0] == "theta[S1,Topic_1]"
        assert frame["parameter"].iloc[-1] == "beta[Topic_2,T4]"

    def test_needs_two_chains(self):
        """Test the chain count check."""
        fit = _synthetic_fit(np.full((1, 8, 1, 2), 0.5), np.full((1, 8, 2, 2), 0.5), [5])

        with pytest.raises(ValueError, match="at least 2 chains"):
            diagnostics(fit)


class TestPosteriorPredictiveCheck:
    """Tests for posterior_predictive_check"""

    @pytest.fixture
    def uniform_fit(self):
        theta = np.full((2, 50, 4, 1), 1.0)
        beta = np.full((2, 50, 1, 3), 1 / 3)
        return _synthetic_fit(theta, beta, [150, 150, 150, 150])

    def test_planted_misfit_has_small_tail_probability(self, uniform_fit):
        """Test that an impossible spike is flagged and a quiet taxon is not."""
        observed = CountTable(
            uniform_fit.taxa_ids,
            uniform_fit.specimen_ids,
            np.array([[150, 0, 0, 0], [0, 0, 0, 0], [0, 75, 75, 75]]),
        )

        result = posterior_predictive_check(uniform_fit, observed, max_draws=40, seed=1)

        assert result.tail_probability[0] == 0.0
        assert result.tail_probability[1] == 1.0
        assert result.replicate_max.shape == (40, 3)

    def test_draws_spread_over_chains(self, uniform_fit):
        """Test that retained draws span the pooled chains."""
        observed = CountTable(uniform_fit.taxa_ids, uniform_fit.specimen_ids, np.ones((3, 4)))

        result = posterior_predictive_check(uniform_fit, observed, max_draws=5)

        assert result.draw_indices.tolist() == [0, 25, 50, 74, 99]

    def test_same_seed_same_replicates(self, uniform_fit):
        """Test reproducibility."""
        observed = CountTable(uniform_fit.taxa_ids, uniform_fit.specimen_ids, np.ones((3, 4)))

        a = posterior_predictive_check(uniform_fit, observed, max_draws=10, seed=3)
        b = posterior_predictive_check(uniform_fit, observed, max_draws=10, seed=3, threads=2)

        np.testing.assert_array_equal(a.replicate_max, b.replicate_max)
        assert list(a.to_frame().columns) == [
            "taxon_id", "observed_max", "replicate_mean", "replicate_sd",
            "tail_probability", "n_draws",
        ]

    def test_identifier_mismatch_raises(self, uniform_fit):
        """Test that observed counts must match the fit."""
        observed = CountTable(["x", "y", "z"], uniform_fit.specimen_ids, np.ones((3, 4)))

        with pytest.raises(DataValidationError, match="fitted taxa and specimens"):
            posterior_predictive_check(uniform_fit, observed)

    def test_single_specimen_maxima_follow_the_binomial(self):
        """Test that one specimen and one topic give Binomial(S, beta_w) replicate maxima."""
        beta_w = np.array([0.5, 0.3, 0.2])
        fit = _synthetic_fit(np.ones((2, 200, 1, 1)), np.tile(beta_w, (2, 200, 1, 1)), [1000])
        observed = CountTable(fit.taxa_ids, fit.specimen_ids, np.array([[500], [300], [200]]))

        result = posterior_predictive_check(fit, observed, max_draws=None, seed=9)

        np.testing.assert_allclose(result.replicate_max.mean(axis=0), 1000 * beta_w, rtol=0.02)
        np.testing.assert_allclose(
            result.replicate_max.std(axis=0), np.sqrt(1000 * beta_w * (1 - beta_w)), rtol=0.15
        )


class TestDifferentialTopics:
    """Tests for topic pseudo-counts, differential topics and summaries"""

    @pytest.fixture
    def shifted_fit(self):
        rng = np.random.default_rng(6)
        first = np.concatenate([rng.uniform(0.7, 0.9, 6), rng.uniform(0.1, 0.3, 6)])
        theta = np.stack([first, 1 - first], axis=1)
        beta = np.array([[0.6, 0.3, 0.1], [0.1, 0.2, 0.7]])
        return _synthetic_fit(
            np.tile(theta, (2, 3, 1, 1)), np.tile(beta, (2, 3, 1, 1)), [1000] * 12
        )

    def test_topic_counts_round_median_share(self, shifted_fit):
        """Test c_tj = round(median theta_jt * S_j)."""
        table = topic_counts(shifted_fit)

        assert table.taxa_ids == ("Topic_1", "Topic_2")
        expected = np.rint(shifted_fit.theta[0, 0].T * 1000)
        np.testing.assert_array_equal(table.counts, expected)

    def test_shifted_topic_is_detected(self, shifted_fit):
        """Test the schema and the direction of the topic shift."""
        frame = differential_topics(shifted_fit, ["a"] * 6 + ["b"] * 6)

        assert list(frame.columns) == DIFFERENTIAL_COLUMNS
        assert frame["Topic"].tolist() == ["Topic_1", "Topic_2"]
        assert frame.loc[0, "lfc"] < 0 < frame.loc[1, "lfc"]
        assert frame.loc[0, "p.adj"] < 0.01

    def test_top_taxa(self, shifted_fit):
        """Test the per-topic ranking of taxa."""
        frame = top_taxa_frame(shifted_fit, n_top=2)

        assert frame["taxon_id"].tolist() == ["T1", "T2", "T3", "T2"]
        assert frame["rank"].tolist() == [1, 2, 1, 2]

    def test_proportions_frame(self, shifted_fit):
        """Test one row of median proportions per specimen."""
        frame = topic_proportions_frame(shifted_fit)

        assert list(frame.columns) == ["specimen_id", "Topic_1", "Topic_2"]
        np.testing.assert_allclose(frame[["Topic_1", "Topic_2"]].sum(axis=1), 1.0)

    @pytest.mark.slow
    def test_shared_proportions_are_rarely_separated(self):
        """Test the false discovery rate when both groups draw theta from one distribution."""
        rng = np.random.default_rng(41)
        beta = np.array([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
        groups = ["a"] * 20 + ["b"] * 20
        n_sims = 600
        false_discoveries = 0

        for _ in range(n_sims):
            theta = rng.dirichlet([6.0, 4.0], size=40)
            fit = _synthetic_fit(
                np.tile(theta, (2, 3, 1, 1)), np.tile(beta, (2, 3, 1, 1)), [2000] * 40
            )
            frame = differential_topics(fit, groups)
            false_discoveries += bool((frame["p.adj"] <= 0.05).any())

        assert false_discoveries / n_sims <= 0.07


class TestFitDocument:
    """Tests for fit_to_payload and fit_from_payload"""

    def test_round_trip_is_exact(self, planted_counts, dataset_factory):
        """Test that draws and the embedded dataset survive JSON serialisation."""
        fit = fit_lda(planted_counts, LdaSpec(T=2, chains=2, iters=12, warmup=6, seed=2))
        dataset = dataset_factory(planted_counts.counts)

        loaded, embedded = fit_from_payload(json.loads(json.dumps(fit_to_payload(fit, dataset))))

        np.testing.assert_array_equal(loaded.theta, fit.theta)
        np.testing.assert_array_equal(loaded.beta, fit.beta)
        np.testing.assert_array_equal(loaded.permutations, fit.permutations)
        assert loaded.spec == fit.spec
        assert loaded.convergence.equals(fit.convergence)
        assert embedded == dataset

    def test_without_dataset(self, planted_counts):
        """Test that the dataset is optional."""
        fit = fit_lda(planted_counts, LdaSpec(T=2, chains=2, iters=12, warmup=6))

        _, embedded = fit_from_payload(fit_to_payload(fit))

        assert embedded is None

    def test_foreign_document_raises(self):
        """Test the format check."""
        with pytest.raises(DataValidationError, match="not a microstat-topic-fit document"):
            fit_from_payload({"format": "microstat-dataset"})

    def test_malformed_array_raises(self, planted_counts):
        """Test that a damaged array is reported by name."""
        payload = fit_to_payload(
            fit_lda(planted_counts, LdaSpec(T=2, chains=2, iters=12, warmup=6))
        )
        payload["beta"]["shape"] = [7]

        with pytest.raises(DataValidationError, match="malformed 'beta' array"):
            fit_from_payload(payload)


class TestScan:
    """Tests for the held-out likelihood scan"""

    def test_split_partitions_every_cell(self, planted_counts):
        """Test that training and held-out reads add up to the counts."""
        train, heldout = holdout_split(planted_counts, 0.3, seed=1)

        np.testing.assert_array_equal(train.counts + heldout, planted_counts.counts)
        assert 0.25 < heldout.sum() / planted_counts.counts.sum() < 0.35

    def test_fraction_range(self, planted_counts):
        """Test the holdout fraction check."""
        with pytest.raises(ValueError, match="must lie in \\(0, 1\\)"):
            holdout_split(planted_counts, 1.0)

    def test_heldout_log_likelihood_of_uniform_model(self):
        """Test the per-token score of a uniform model."""
        fit = _synthetic_fit(np.full((2, 4, 2, 1), 1.0), np.full((2, 4, 1, 4), 0.25), [8, 8])

        score = heldout_log_likelihood(fit, np.array([[1, 0], [2, 1], [0, 0], [3, 1]]))

        assert score == pytest.approx(np.log(0.25))

    def test_scan_reports_each_grid_point(self, planted_counts):
        """Test the scan table."""
        spec = LdaSpec(T=1, chains=2, iters=40, warmup=20)

        frame = scan_topics(planted_counts, [1, 2], spec, holdout_fraction=0.2)

        assert frame["T"].tolist() == [1, 2]
        assert np.all(np.isfinite(frame["heldout_ll_per_token"]))
        assert frame["n_heldout_tokens"].nunique() == 1
        assert frame.loc[1, "heldout_ll_per_token"] > frame.loc[0, "heldout_ll_per_token"]
