"""Paired nonparametric comparison utilities for benchmark summaries."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

# Exact null distribution is tractable up to here; beyond it the normal
# approximation with continuity and tie corrections takes over.
EXACT_LIMIT = 15
MIN_PAIRS = 5


class DegenerateSampleError(ValueError):
    """Every pairwise difference is zero; the test is undefined."""


def wilcoxon_signed_rank(a, b) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test for paired samples.

    Returns ``(w_plus, p)`` where ``w_plus`` is the sum of ranks of the
    positive differences ``a - b`` (zeros dropped, ties get average
    ranks). Exact enumeration for up to 15 nonzero pairs, otherwise a
    normal approximation with continuity and tie corrections.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    diff = a - b
    if not np.all(np.isfinite(diff)):
        raise ValueError("non-finite differences")
    diff = diff[diff != 0.0]
    n = diff.size
    if np.asarray(a).size and n == 0:
        raise DegenerateSampleError("all pairwise differences are zero")
    if n < MIN_PAIRS:
        raise ValueError(
            f"need at least {MIN_PAIRS} nonzero pairs, got {n}"
        )
    ranks = rankdata(np.abs(diff))
    w_plus = float(np.sum(ranks[diff > 0]))
    if n <= EXACT_LIMIT:
        p = _exact_two_sided(ranks, w_plus)
    else:
        p = _normal_two_sided(ranks, w_plus, n)
    return w_plus, min(1.0, p)


def _exact_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    # Work with doubled ranks so averaged ties stay integral.
    r2 = np.rint(2.0 * ranks).astype(int)
    total = int(np.sum(r2))
    counts = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in r2:
        nxt = counts.copy()
        nxt[r:] += counts[: counts.size - r]
        counts = nxt
    denom = 2.0 ** len(r2)
    w2 = int(np.rint(2.0 * w_plus))
    p_le = float(np.sum(counts[: w2 + 1])) / denom
    p_ge = float(np.sum(counts[w2:])) / denom
    return 2.0 * min(p_le, p_ge)


def _normal_two_sided(ranks: np.ndarray, w_plus: float, n: int) -> float:
    from scipy.stats import norm

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: each group of t equal |diff|s removes (t^3 - t)/48*2
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    if var <= 0:
        raise DegenerateSampleError("zero variance under the null")
    sd = np.sqrt(var)
    # continuity correction toward the mean
    if w_plus > mean:
        z = (w_plus - mean - 0.5) / sd
    elif w_plus < mean:
        z = (w_plus - mean + 0.5) / sd
    else:
        z = 0.0
    return 2.0 * float(norm.sf(abs(z)))


def bonferroni(alpha: float, k: int) -> float:
    """Per-comparison threshold controlling family-wise error at ``alpha``."""
    if not 0 < alpha <= 1:
        raise ValueError("alpha must be in (0, 1]")
    if k < 1:
        raise ValueError("k must be at least 1")
    return alpha / k
