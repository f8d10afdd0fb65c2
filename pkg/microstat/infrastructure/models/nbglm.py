"""
Two-group negative binomial GLM Wald tests with BH adjustment.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import linalg, stats
from statsmodels.api import GLM, families
from statsmodels.genmod.families import links
from statsmodels.stats.multitest import multipletests

from microstat.core.count_table import CountTable
from microstat.shared import ordered_map
from microstat.shared.errors import DataValidationError, flag
from .negative_binomial import MAX_DISPERSION, MAX_ITERATIONS, dispersion_mle

LFC_CLAMP = 30.0
TOLERANCE = 1e-8
WALD_COLUMNS = ["lfc", "lfcSE", "WTS", "pvalue", "p.adj"]


@dataclass(frozen=True)
class WaldRow:
    """
    Wald test of the group coefficient for one feature.

    lfc is the log2 fold change of the second group (in sorted label order)
    over the first; WTS = lfc / lfcSE.
    """

    feature_id: str
    lfc: float
    lfcSE: float
    WTS: float
    pvalue: float
    p_adj: float
    base_mean: float = float("nan")
    dispersion: float = float("nan")
    flags: tuple[str, ...] = ()


def bh_adjust(pvalues: Sequence[float]) -> np.ndarray:
    """
    Benjamini-Hochberg adjusted p-values.

    NaN entries are kept as NaN and left out of the number of tests.
    """
    p = np.asarray(pvalues, dtype=float)
    out = np.full(p.shape, np.nan)
    finite = ~np.isnan(p)
    if finite.any():
        if np.any((p[finite] < 0) | (p[finite] > 1)):
            raise ValueError("p-values must lie in [0, 1]")
        out[finite] = multipletests(p[finite], method="fdr_bh")[1]
    return out


def _glm_coefficients(
    y: np.ndarray, X: np.ndarray, offset: np.ndarray, k: float, start: np.ndarray
) -> np.ndarray:
    family = families.NegativeBinomial(alpha=1.0 / k, link=links.Log())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = GLM(y, X, family=family, offset=offset).fit(
            start_params=start, tol=1e-12, maxiter=100
        )
    return np.asarray(result.params, dtype=float)


def _alternate(
    y: np.ndarray, X: np.ndarray, offset: np.ndarray
) -> tuple[np.ndarray, float, bool]:
    """
    Joint ML of (b, k): IRLS for b at fixed k, Newton for k at fixed b.
    """
    d = np.exp(offset)
    b = np.zeros(X.shape[1])
    b[0] = math.log(y.sum() / d.sum())
    for col in range(1, X.shape[1]):
        in_level = X[:, col] == 1
        ratio = (y[in_level].sum() / d[in_level].sum()) / math.exp(b[0])
        b[col] = math.log(ratio) if ratio > 0 else 0.0

    mu = np.exp(X @ b + offset)
    excess = np.sum((y - mu) ** 2 - mu)
    if excess <= 0:
        k = MAX_DISPERSION
    else:
        k = float(np.clip(np.sum(mu**2) / excess, 1e-4, MAX_DISPERSION))

    for _ in range(MAX_ITERATIONS):
        b_new = _glm_coefficients(y, X, offset, k, b)
        mu = np.exp(X @ b_new + offset)
        k_new, _ = dispersion_mle(y, mu, k)
        done = np.max(np.abs(b_new - b)) < TOLERANCE and abs(math.log(k_new / k)) < TOLERANCE
        b, k = b_new, k_new
        if done:
            return b, k, True
    return b, k, False


def _observed_information(y: np.ndarray, X: np.ndarray, mu: np.ndarray, k: float) -> np.ndarray:
    weights = k * mu * (y + k) / (k + mu) ** 2
    return X.T @ (weights[:, None] * X)


def _test_feature(
    feature_id: str, y: np.ndarray, x: np.ndarray, offset: np.ndarray
) -> WaldRow:
    d = np.exp(offset)
    base_mean = float(np.mean(y / d))
    if y.sum() == 0:
        nan = float("nan")
        return WaldRow(feature_id, nan, nan, nan, nan, nan, 0.0, nan, ("all_zero",))

    X = np.column_stack([np.ones_like(x), x])
    flags: list[str] = []
    zero_ref = y[x == 0].sum() == 0
    zero_alt = y[x == 1].sum() == 0

    if zero_ref or zero_alt:
        # One group is all zero: fit the other group alone and clamp the contrast
        flags.append("separation")
        keep = x == (1.0 if zero_ref else 0.0)
        b_keep, k, converged = _alternate(y[keep], X[keep, :1], offset[keep])
        b1 = (LFC_CLAMP if zero_ref else -LFC_CLAMP) * math.log(2.0)
        b0 = b_keep[0] - b1 if zero_ref else b_keep[0]
        b = np.array([b0, b1])
    else:
        b, k, converged = _alternate(y, X, offset)
        if abs(b[1]) > LFC_CLAMP * math.log(2.0):
            flags.append("separation")
            b[1] = math.copysign(LFC_CLAMP * math.log(2.0), b[1])
    if not converged:
        flags.append("not_converged")
    if k >= MAX_DISPERSION:
        flags.append("poisson_limit")

    mu = np.exp(X @ b + offset)
    information = _observed_information(y, X, mu, k)
    try:
        covariance = linalg.inv(information)
        se = math.sqrt(covariance[1, 1]) if covariance[1, 1] > 0 else float("inf")
    except (linalg.LinAlgError, ValueError):
        se = float("inf")

    lfc = b[1] / math.log(2.0)
    lfc_se = se / math.log(2.0)
    wts = lfc / lfc_se if np.isfinite(lfc_se) else 0.0
    pvalue = float(2.0 * stats.norm.sf(abs(wts)))
    return WaldRow(
        feature_id, float(lfc), float(lfc_se), float(wts), pvalue, pvalue,
        base_mean, float(k), tuple(flags),
    )


def two_level_design(groups: Sequence[Optional[str]]) -> tuple[np.ndarray, tuple[str, str]]:
    """
    Encode a two-level factor as 0/1 with the first sorted label as reference.

    Raises:
        DataValidationError: If there are not exactly two levels, a label is
            missing, or a level has fewer than two specimens
    """
    labels = list(groups)
    if any(g is None for g in labels):
        raise DataValidationError("every specimen needs a group label")
    levels = sorted(set(labels))
    if len(levels) != 2:
        raise DataValidationError(
            f"two-level designs only; got {len(levels)} level(s): {levels}"
        )
    x = np.array([1.0 if g == levels[1] else 0.0 for g in labels])
    for level, size in zip(levels, (np.sum(x == 0), np.sum(x == 1))):
        if size < 2:
            raise DataValidationError(
                f"group '{level}' has {int(size)} specimen(s); need at least 2"
            )
    return x, (levels[0], levels[1])


def wald_test(
    counts: Union[CountTable, np.ndarray],
    groups: Sequence[Optional[str]],
    size_factors: Sequence[float],
    feature_ids: Optional[Sequence[str]] = None,
    threads: Optional[int] = None,
) -> list[WaldRow]:
    """
    Per-feature NB GLM log(mu_j) = log(d_j) + b0 + b1 x_j with Wald tests.

    Dispersion is estimated per feature by maximum likelihood with the
    coefficients profiled (IRLS and Newton alternated to 1e-8). lfc = b1 /
    ln 2 with a standard error from the observed information; p-values are
    two-sided normal and BH-adjusted across features. All-zero features get
    NaN rows outside the adjustment. When one group is all zero the lfc is
    clamped at +/-30 and flagged.

    Args:
        counts: Feature x specimen integer counts
        groups: Group label per specimen (two levels)
        size_factors: Positive size factor per specimen
        feature_ids: Row identifiers (taken from a CountTable if omitted)
        threads: Worker cap (None uses the global setting)

    Returns:
        list[WaldRow]: One row per feature, in input order
    """
    if isinstance(counts, CountTable):
        feature_ids = list(counts.taxa_ids) if feature_ids is None else list(feature_ids)
        matrix = counts.counts.astype(float)
    else:
        matrix = np.asarray(counts, dtype=float)
        if matrix.ndim != 2:
            raise ValueError(f"counts must be 2-D, got {matrix.ndim} dimension(s)")
        if feature_ids is None:
            feature_ids = [f"feature_{i + 1}" for i in range(matrix.shape[0])]
    if np.any(matrix < 0) or np.any(matrix != np.round(matrix)):
        raise DataValidationError("counts must be non-negative integers")

    d = np.asarray(size_factors, dtype=float)
    if d.shape != (matrix.shape[1],):
        raise ValueError(f"size_factors has length {d.size}, expected {matrix.shape[1]}")
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise ValueError("size factors must be finite and > 0")
    if len(feature_ids) != matrix.shape[0]:
        raise ValueError(f"{len(feature_ids)} feature ids for {matrix.shape[0]} rows")
    if len(groups) != matrix.shape[1]:
        raise ValueError(f"{len(groups)} group labels for {matrix.shape[1]} specimens")

    x, _ = two_level_design(groups)
    offset = np.log(d)
    rows = ordered_map(
        lambda i: _test_feature(str(feature_ids[i]), matrix[i], x, offset),
        range(matrix.shape[0]),
        threads,
    )

    separated = [r.feature_id for r in rows if "separation" in r.flags]
    if separated:
        flag(f"lfc clamped at +/-{LFC_CLAMP:g} for separated feature(s): {', '.join(separated)}")

    adjusted = bh_adjust([r.pvalue for r in rows])
    return [
        WaldRow(
            r.feature_id, r.lfc, r.lfcSE, r.WTS, r.pvalue, float(a),
            r.base_mean, r.dispersion, r.flags,
        )
        for r, a in zip(rows, adjusted)
    ]


def wald_frame(rows: Sequence[WaldRow], id_column: str = "feature_id") -> pd.DataFrame:
    """Tabulate Wald rows with the lfc/lfcSE/WTS/pvalue/p.adj layout."""
    return pd.DataFrame(
        {
            id_column: [r.feature_id for r in rows],
            "baseMean": [r.base_mean for r in rows],
            "lfc": [r.lfc for r in rows],
            "lfcSE": [r.lfcSE for r in rows],
            "WTS": [r.WTS for r in rows],
            "pvalue": [r.pvalue for r in rows],
            "p.adj": [r.p_adj for r in rows],
            "dispersion": [r.dispersion for r in rows],
            "flags": [";".join(r.flags) for r in rows],
        }
    )
