"""
Comparison metrics.

Coefficient of variation, win rate, slowdown over a baseline and head-to-head
ratio histograms over per-program costs.
"""

import math
from typing import Dict, List, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..pipeline.errors import (
    DomainMismatch,
    EmptySample,
    InsufficientTechniques,
    NonpositiveBaseline,
    ZeroMean,
)


class SlowdownSummary(BaseModel):
    """Per-program ratios and their aggregates."""

    model_config = ConfigDict(frozen=True)

    per_program: Dict[str, float]
    mean: float
    median: float


class HistogramBin(BaseModel):
    """Programs whose max/min ratio falls in [lower_pct, upper_pct)."""

    model_config = ConfigDict(frozen=True)

    lower_pct: int
    upper_pct: int
    count_a: int = 0
    count_b: int = 0
    count_tie: int = 0

    @property
    def total(self) -> int:
        return self.count_a + self.count_b + self.count_tie


def coefficient_of_variation(values: Sequence[float]) -> float:
    """
    Population standard deviation divided by the mean.

    Raises:
        EmptySample: No values
        ZeroMean: Mean is zero
    """
    if len(values) == 0:
        raise EmptySample("coefficient_of_variation needs at least one value")
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if mean == 0:
        raise ZeroMean("coefficient of variation is undefined for mean 0")
    return float(arr.std(ddof=0) / mean)


def lower_median(values: Sequence[float]) -> float:
    """Median using the lower middle element for even counts."""
    if len(values) == 0:
        raise EmptySample("median of an empty sample")
    ordered = sorted(values)
    return float(ordered[(len(ordered) - 1) // 2])


def win_rate(per_program: Mapping[str, Mapping[str, float]]) -> Dict[str, float]:
    """
    Fraction of programs on which each technique is strictly the slowest.

    Args:
        per_program: program -> technique -> mean cost

    Returns:
        technique -> wins / programs (ties credit nobody)

    Raises:
        InsufficientTechniques: A program has fewer than two techniques
    """
    techniques = sorted({t for costs in per_program.values() for t in costs})
    wins = {t: 0 for t in techniques}

    for program, costs in per_program.items():
        if len(costs) < 2:
            raise InsufficientTechniques(f"program {program} has {len(costs)} technique(s); need at least 2")
        best = max(costs.values())
        leaders = [t for t, c in costs.items() if c == best]
        if len(leaders) == 1:
            wins[leaders[0]] += 1

    total = len(per_program)
    return {t: (wins[t] / total if total else 0.0) for t in techniques}


def slowdown_over_baseline(costs: Mapping[str, float], baseline: Mapping[str, float]) -> SlowdownSummary:
    """
    Per-program cost ratios against a baseline, with mean and lower median.

    Raises:
        DomainMismatch: Program sets differ
        NonpositiveBaseline: A baseline value is not positive
        EmptySample: No programs
    """
    if set(costs) != set(baseline):
        raise DomainMismatch("costs and baseline cover different programs")
    if not costs:
        raise EmptySample("slowdown needs at least one program")

    ratios = {}
    for program in sorted(costs):
        if baseline[program] <= 0:
            raise NonpositiveBaseline(f"baseline for {program} is {baseline[program]}")
        ratios[program] = costs[program] / baseline[program]

    values = list(ratios.values())
    return SlowdownSummary(
        per_program=ratios,
        mean=float(np.mean(values)),
        median=lower_median(values),
    )


def head_to_head_histogram(
    a: Mapping[str, float],
    b: Mapping[str, float],
    bucket_width_pct: int = 10,
) -> List[HistogramBin]:
    """
    Bucket programs by how much slower the slower side is.

    The ratio max/min of each program is expressed in percent and placed in
    the band [k*width, (k+1)*width). Programs with equal costs count as ties
    in the band holding 100%.

    Args:
        a: program -> cost for technique a
        b: program -> cost for technique b
        bucket_width_pct: Band width in percent

    Returns:
        Non-empty bins ordered by lower bound

    Raises:
        DomainMismatch: Program sets differ
    """
    if set(a) != set(b):
        raise DomainMismatch("histogram sides cover different programs")
    if bucket_width_pct <= 0:
        raise ValueError("bucket_width_pct must be positive")

    bins: Dict[int, Dict[str, int]] = {}

    def band(pct: float) -> int:
        # tolerance keeps float noise such as 199.99999999 in the 200 band
        return int(math.floor(pct / bucket_width_pct + 1e-9)) * bucket_width_pct

    for program in sorted(a):
        cost_a, cost_b = a[program], b[program]
        if cost_a == cost_b:
            side, pct = "tie", 100.0
        else:
            high, low = max(cost_a, cost_b), min(cost_a, cost_b)
            pct = math.inf if low <= 0 else high / low * 100.0
            side = "a" if cost_a > cost_b else "b"
        lower = band(pct) if math.isfinite(pct) else -1
        counts = bins.setdefault(lower, {"a": 0, "b": 0, "tie": 0})
        counts[side] += 1

    result = []
    # -1 marks programs whose cheaper side cost 0; listed last
    for lower in sorted(bins, key=lambda v: (v < 0, v)):
        counts = bins[lower]
        result.append(HistogramBin(
            lower_pct=lower,
            upper_pct=lower + bucket_width_pct if lower >= 0 else -1,
            count_a=counts["a"],
            count_b=counts["b"],
            count_tie=counts["tie"],
        ))
    return result
