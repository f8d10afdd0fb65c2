"""
Latent Dirichlet allocation by collapsed Gibbs sampling.

Specimens are documents and taxa are words: specimen j contributes S_j
tokens, one per read. Each sweep resamples every token's topic from

    P(z = t | rest) ∝ (n_jt + alpha) (n_tw + gamma) / (n_t + m gamma)

with the token's own assignment removed from the counts. Tokens are visited
specimen by specimen, taxon by taxon within a specimen, and the uniforms for
a sweep are drawn up front from the chain's stream, so a seed fixes every
draw.

Above ``MAX_TOKENS`` tokens the per-token assignment vector is replaced by
per-(specimen, taxon) topic counts. Tokens within a cell are exchangeable,
so each update removes a token drawn uniformly from the cell and resamples
it from the same conditional; the chain targets the same posterior.
"""

import logging
from dataclasses import replace
from math import lgamma
from typing import Callable, Dict, List, Optional

import numpy as np
from numba import jit

from microstat.core.count_table import CountTable
from microstat.core.dataset import Dataset
from microstat.shared import TransformableMixin, ordered_map
from microstat.shared.errors import DataValidationError, flag
from microstat.shared.random import make_rng, spawn
from .alignment import align_chains
from .base import TopicModel
from .diagnostics import MIN_DRAWS, diagnostics
from .fit import LdaSpec, TopicFit

logger = logging.getLogger(__name__)

MAX_TOKENS = 5_000_000


@jit(nopython=True, nogil=True)
def gibbs_sweep(z, docs, words, n_jt, n_tw, n_t, alpha, gamma, uniforms):
    """One pass over every token, in token order. Counts are updated in place."""
    n_topics = n_t.shape[0]
    m_gamma = gamma * n_tw.shape[1]
    cumulative = np.empty(n_topics)
    for i in range(z.shape[0]):
        j = docs[i]
        w = words[i]
        t = z[i]
        n_jt[j, t] -= 1
        n_tw[t, w] -= 1
        n_t[t] -= 1

        total = 0.0
        for s in range(n_topics):
            total += (n_jt[j, s] + alpha) * (n_tw[s, w] + gamma) / (n_t[s] + m_gamma)
            cumulative[s] = total
        u = uniforms[i] * total
        t = 0
        while t < n_topics - 1 and cumulative[t] <= u:
            t += 1

        z[i] = t
        n_jt[j, t] += 1
        n_tw[t, w] += 1
        n_t[t] += 1


@jit(nopython=True, nogil=True)
def grouped_sweep(
    cell_doc, cell_word, cell_count, cell_topic, n_jt, n_tw, n_t, alpha, gamma, uniforms
):
    """One pass of S_j updates per cell using per-cell topic counts (two uniforms per update)."""
    n_topics = n_t.shape[0]
    m_gamma = gamma * n_tw.shape[1]
    cumulative = np.empty(n_topics)
    position = 0
    for c in range(cell_doc.shape[0]):
        j = cell_doc[c]
        w = cell_word[c]
        for _ in range(cell_count[c]):
            u = uniforms[position] * cell_count[c]
            position += 1
            t = 0
            held = cell_topic[c, 0]
            while t < n_topics - 1 and held <= u:
                t += 1
                held += cell_topic[c, t]
            cell_topic[c, t] -= 1
            n_jt[j, t] -= 1
            n_tw[t, w] -= 1
            n_t[t] -= 1

            total = 0.0
            for s in range(n_topics):
                total += (n_jt[j, s] + alpha) * (n_tw[s, w] + gamma) / (n_t[s] + m_gamma)
                cumulative[s] = total
            u = uniforms[position] * total
            position += 1
            t = 0
            while t < n_topics - 1 and cumulative[t] <= u:
                t += 1

            cell_topic[c, t] += 1
            n_jt[j, t] += 1
            n_tw[t, w] += 1
            n_t[t] += 1


@jit(nopython=True)
def joint_log_likelihood(n_jt, n_tw, n_t, alpha, gamma):
    """log p(tokens, assignments) with theta and beta integrated out."""
    n_docs, n_topics = n_jt.shape
    m = n_tw.shape[1]
    total = 0.0
    for t in range(n_topics):
        total += lgamma(m * gamma) - lgamma(n_t[t] + m * gamma)
        for w in range(m):
            total += lgamma(n_tw[t, w] + gamma) - lgamma(gamma)
    for j in range(n_docs):
        size = 0
        for t in range(n_topics):
            size += n_jt[j, t]
            total += lgamma(n_jt[j, t] + alpha) - lgamma(alpha)
        total += lgamma(n_topics * alpha) - lgamma(size + n_topics * alpha)
    return total


class _Corpus:
    """Canonical token layout of a count table."""

    def __init__(self, counts: np.ndarray, grouped: bool):
        m, n = counts.shape
        per_cell = counts.T.ravel()
        cell_doc = np.repeat(np.arange(n, dtype=np.int64), m)
        cell_word = np.tile(np.arange(m, dtype=np.int64), n)
        self.n_docs = n
        self.n_words = m
        self.library_sizes = counts.sum(axis=0)
        self.n_tokens = int(per_cell.sum())
        self.grouped = grouped
        if grouped:
            keep = per_cell > 0
            self.cell_doc = cell_doc[keep]
            self.cell_word = cell_word[keep]
            self.cell_count = per_cell[keep].astype(np.int64)
        else:
            self.docs = np.repeat(cell_doc, per_cell)
            self.words = np.repeat(cell_word, per_cell)


def _run_chain(corpus: _Corpus, spec: LdaSpec, stream: np.random.SeedSequence):
    rng = make_rng(stream)
    n_topics = spec.T
    n_jt = np.zeros((corpus.n_docs, n_topics), dtype=np.int64)
    n_tw = np.zeros((n_topics, corpus.n_words), dtype=np.int64)

    if corpus.grouped:
        cell_topic = rng.multinomial(corpus.cell_count, np.full(n_topics, 1.0 / n_topics))
        cell_topic = cell_topic.astype(np.int64)
        np.add.at(n_jt, corpus.cell_doc, cell_topic)
        np.add.at(n_tw.T, corpus.cell_word, cell_topic)
        n_t = cell_topic.sum(axis=0)
        n_uniforms = 2 * corpus.n_tokens
    else:
        z = rng.integers(0, n_topics, size=corpus.n_tokens).astype(np.int64)
        np.add.at(n_jt, (corpus.docs, z), 1)
        np.add.at(n_tw, (z, corpus.words), 1)
        n_t = np.bincount(z, minlength=n_topics).astype(np.int64)
        n_uniforms = corpus.n_tokens

    n_draws = spec.draws_per_chain
    theta = np.empty((n_draws, corpus.n_docs, n_topics))
    beta = np.empty((n_draws, n_topics, corpus.n_words))
    trace = np.empty(spec.iters)
    theta_denominator = corpus.library_sizes[:, None] + n_topics * spec.alpha

    kept = 0
    for sweep in range(spec.iters):
        uniforms = rng.random(n_uniforms)
        if corpus.grouped:
            grouped_sweep(
                corpus.cell_doc,
                corpus.cell_word,
                corpus.cell_count,
                cell_topic,
                n_jt,
                n_tw,
                n_t,
                spec.alpha,
                spec.gamma,
                uniforms,
            )
        else:
            gibbs_sweep(
                z, corpus.docs, corpus.words, n_jt, n_tw, n_t, spec.alpha, spec.gamma, uniforms
            )
        trace[sweep] = joint_log_likelihood(n_jt, n_tw, n_t, spec.alpha, spec.gamma)

        if sweep >= spec.warmup and (sweep - spec.warmup) % spec.thin == 0:
            rows = (n_jt + spec.alpha) / theta_denominator
            theta[kept] = rows / rows.sum(axis=1, keepdims=True)
            rows = (n_tw + spec.gamma) / (n_t[:, None] + corpus.n_words * spec.gamma)
            beta[kept] = rows / rows.sum(axis=1, keepdims=True)
            kept += 1

    return theta, beta, trace


def fit_lda(
    counts: CountTable,
    spec: LdaSpec,
    threads: Optional[int] = None,
    max_tokens: int = MAX_TOKENS,
) -> TopicFit:
    """
    Fit LDA with independent collapsed Gibbs chains, then align and diagnose them.

    Chain c runs from the c-th stream spawned from spec.seed. With two or
    more chains the topics are aligned to chain 1 and split-R-hat and bulk
    ESS are attached as ``convergence``.

    Args:
        counts: Count table (taxa x specimens); every specimen needs reads
        spec: Sampler settings
        threads: Worker cap for running chains in parallel
        max_tokens: Token count above which the grouped sampler is used

    Returns:
        TopicFit: Aligned posterior draws

    Raises:
        DataValidationError: If a specimen has no reads or T is not below the
            total token count
    """
    if not isinstance(counts, CountTable):
        raise TypeError(f"Expected CountTable, got {type(counts).__name__}")
    if not isinstance(spec, LdaSpec):
        raise TypeError(f"Expected LdaSpec, got {type(spec).__name__}")

    matrix = counts.counts
    empty = np.flatnonzero(matrix.sum(axis=0) == 0)
    if empty.size:
        raise DataValidationError(
            f"specimen '{counts.specimen_ids[empty[0]]}' has no reads; "
            "topic models need every specimen to have tokens"
        )
    n_tokens = int(matrix.sum())
    if spec.T >= n_tokens:
        raise DataValidationError(f"T={spec.T} must be smaller than the token count {n_tokens}")

    flags: list[str] = []
    grouped = n_tokens > max_tokens
    if grouped:
        flags.append("grouped_sampling")
        logger.info(
            "%d tokens exceed %d; sampling per (specimen, taxon) cell", n_tokens, max_tokens
        )
    corpus = _Corpus(matrix, grouped)

    streams = spawn(spec.seed, spec.chains)
    results = ordered_map(lambda stream: _run_chain(corpus, spec, stream), streams, threads)

    fit = TopicFit(
        taxa_ids=counts.taxa_ids,
        specimen_ids=counts.specimen_ids,
        spec=spec,
        library_sizes=corpus.library_sizes.astype(np.int64),
        theta=np.stack([r[0] for r in results]),
        beta=np.stack([r[1] for r in results]),
        log_likelihood=np.stack([r[2] for r in results]),
        permutations=np.tile(np.arange(spec.T, dtype=np.int64), (spec.chains, 1)),
        flags=tuple(flags),
    )
    if spec.chains < 2:
        flag("a single chain cannot be aligned or checked for convergence")
        return replace(fit, flags=fit.flags + ("single_chain",))

    fit = align_chains(fit)
    if fit.n_draws >= MIN_DRAWS:
        fit = replace(fit, convergence=diagnostics(fit))
    return fit


class CollapsedGibbsLda(TopicModel, TransformableMixin):
    """
    Topic model over a dataset's count table.

    Args:
        spec: Sampler settings
        biological_only: Drop negative controls before fitting
        threads: Worker cap for chains
        transformers: Optional dict of transformer lists applied to the
            dataset ("before") and the fit ("after")
    """

    def __init__(
        self,
        spec: LdaSpec,
        biological_only: bool = True,
        threads: Optional[int] = None,
        transformers: Optional[Dict[str, List[Callable]]] = None,
    ):
        if not isinstance(spec, LdaSpec):
            raise TypeError(f"spec must be an LdaSpec, got {type(spec).__name__}")
        self.spec: LdaSpec = spec
        self.biological_only: bool = biological_only
        self.threads: Optional[int] = threads
        self.transformers = transformers or {}

    def fit(self, dataset: Dataset) -> TopicFit:
        dataset = self._apply_transformers(dataset, "before")
        if self.biological_only:
            dataset = dataset.biological()
        fit = fit_lda(dataset.counts, self.spec, self.threads)
        return self._apply_transformers(fit, "after")
