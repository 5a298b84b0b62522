"""
Mann-Whitney U test.

U is computed from the rank sum of the first sample with midranks for ties.
Small samples (both at most 12 values) get the exact p-value from the
distribution of rank sums over every labeling of the pooled values; larger
samples use the normal approximation with tie and continuity corrections.
"""

from enum import Enum
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import comb
from scipy.stats import norm, rankdata

from ..pipeline.errors import EmptySample

EXACT_CUTOFF = 12


class Alternative(str, Enum):
    """Alternative hypothesis."""
    GREATER = "greater"
    TWO_SIDED = "two_sided"


class Method(str, Enum):
    """How the p-value was obtained."""
    EXACT_ENUMERATION = "exact_enumeration"
    NORMAL_APPROXIMATION = "normal_approximation"


class StatTestResult(BaseModel):
    """Outcome of a Mann-Whitney test."""

    model_config = ConfigDict(frozen=True)

    u_statistic: float
    p_value: float
    method: Method
    alternative: Alternative
    m: int
    n: int

    @property
    def u_prime(self) -> float:
        """U of the reversed comparison; U + U' = m*n."""
        return self.m * self.n - self.u_statistic

    def rejects(self, alpha: float = 0.05) -> bool:
        """True when p < alpha."""
        return self.p_value < alpha


def mann_whitney_u(
    xs: Sequence[float],
    ys: Sequence[float],
    alternative: Alternative = Alternative.GREATER,
) -> StatTestResult:
    """
    Test whether xs tends to be larger than ys.

    Args:
        xs: First sample
        ys: Second sample
        alternative: 'greater' (xs stochastically larger) or 'two_sided'

    Returns:
        U statistic of xs, p-value and the method used

    Raises:
        EmptySample: Either sample is empty
    """
    alternative = Alternative(alternative)
    m, n = len(xs), len(ys)
    if m == 0 or n == 0:
        raise EmptySample("mann_whitney_u needs two non-empty samples")

    pooled = np.concatenate([np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)])
    ranks = rankdata(pooled)  # midranks for ties
    rank_sum = float(ranks[:m].sum())
    u_stat = rank_sum - m * (m + 1) / 2.0

    if m <= EXACT_CUTOFF and n <= EXACT_CUTOFF:
        p_value = _exact_p(ranks, m, rank_sum, alternative)
        method = Method.EXACT_ENUMERATION
    else:
        p_value = _normal_p(pooled, m, n, u_stat, alternative)
        method = Method.NORMAL_APPROXIMATION

    return StatTestResult(
        u_statistic=u_stat,
        p_value=float(min(1.0, max(0.0, p_value))),
        method=method,
        alternative=alternative,
        m=m,
        n=n,
    )


def rank_sum_distribution(ranks: np.ndarray, m: int) -> np.ndarray:
    """
    Count labelings by rank sum.

    Midranks are multiples of 0.5, so sums are tracked doubled as integers.
    Entry s of the result counts the size-m subsets of the pooled ranks whose
    doubled rank sum equals s; the entries sum to C(N, m).
    """
    doubled = np.rint(np.asarray(ranks) * 2).astype(np.int64)
    max_sum = int(np.sort(doubled)[::-1][:m].sum())
    counts = np.zeros((m + 1, max_sum + 1), dtype=np.int64)
    counts[0, 0] = 1
    for value in doubled:
        # walk sizes downwards so each value is used at most once
        for k in range(m, 0, -1):
            counts[k, value:] += counts[k - 1, : max_sum + 1 - value]
    return counts[m]


def _exact_p(ranks: np.ndarray, m: int, rank_sum: float, alternative: Alternative) -> float:
    distribution = rank_sum_distribution(ranks, m)
    total = comb(len(ranks), m, exact=True)
    observed = int(round(rank_sum * 2))

    upper = distribution[observed:].sum() / total
    if alternative == Alternative.GREATER:
        return float(upper)
    lower = distribution[: observed + 1].sum() / total
    return float(min(1.0, 2.0 * min(upper, lower)))


def _normal_p(pooled: np.ndarray, m: int, n: int, u_stat: float, alternative: Alternative) -> float:
    big_n = m + n
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts ** 3 - tie_counts).sum())
    variance = m * n / 12.0 * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
    if variance <= 0:
        return 1.0
    sigma = variance ** 0.5
    mu = m * n / 2.0

    if alternative == Alternative.GREATER:
        z = (u_stat - mu - 0.5) / sigma
        return float(norm.sf(z))
    z = (abs(u_stat - mu) - 0.5) / sigma
    return float(2.0 * norm.sf(z))
