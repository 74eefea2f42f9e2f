"""Welch's unequal-variances t-test."""

import numpy as np
from scipy import stats


def welch_t_test(sample_a, sample_b):
    """Return ``(t, p)`` for a two-sided Welch test of equal means.

    Degrees of freedom follow Welch-Satterthwaite. Raises ``ValueError`` for
    samples with fewer than two values or with zero variance in both.
    """
    a = np.asarray(sample_a, dtype=float).ravel()
    b = np.asarray(sample_b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    se2 = va + vb
    if se2 == 0:
        raise ValueError("degenerate samples: both have zero variance")
    diff = a.mean() - b.mean()
    t = diff / np.sqrt(se2)
    df = se2**2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    p = 2.0 * stats.t.sf(abs(t), df)
    return float(t), float(min(p, 1.0))
