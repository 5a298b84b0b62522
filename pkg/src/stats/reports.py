"""
Evaluation reports.

Builds comparison reports over per-program technique costs, slices them by
input size, and writes JSON, CSV and a plain-text summary table.
"""

import json
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from ..pipeline.logger import get_logger
from .mann_whitney import Alternative, StatTestResult, mann_whitney_u
from .metrics import HistogramBin, head_to_head_histogram, lower_median, slowdown_over_baseline, win_rate

logger = get_logger(__name__)

DEFAULT_SIZE_THRESHOLDS = (1024, 10 * 1024, 100 * 1024, 1024 * 1024)


class SlowdownAggregate(BaseModel):
    """Mean and median slowdown of one technique."""

    mean: float
    median: float


class ComparisonReport(BaseModel):
    """Technique comparison over a set of programs."""

    per_program: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    win_rate: Dict[str, float] = Field(default_factory=dict)
    slowdown: Dict[str, SlowdownAggregate] = Field(default_factory=dict)
    histogram: List[HistogramBin] = Field(default_factory=list)
    histogram_sides: List[str] = Field(default_factory=list)
    baseline: Dict[str, float] = Field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.per_program

    @property
    def techniques(self) -> List[str]:
        return sorted({t for costs in self.per_program.values() for t in costs})


class DiscriminationReport(BaseModel):
    """Costs of checker-hitting versus non-hitting inputs."""

    hit_count: int
    miss_count: int
    hit_mean_cost: float
    miss_mean_cost: float
    ratio: Optional[float] = None
    test: Optional[StatTestResult] = None


def build_comparison_report(
    per_program: Mapping[str, Mapping[str, float]],
    baseline: Optional[Mapping[str, float]] = None,
    histogram_sides: Optional[Sequence[str]] = None,
    bucket_width_pct: int = 10,
) -> ComparisonReport:
    """
    Compute win rate, slowdown and a head-to-head histogram.

    Args:
        per_program: program -> technique -> mean cost
        baseline: program -> default-test cost (slowdown denominator)
        histogram_sides: Two techniques to compare head to head (default: first two)
        bucket_width_pct: Histogram band width

    Returns:
        Comparison report; empty when no programs are given
    """
    per_program = {p: dict(costs) for p, costs in sorted(per_program.items())}
    if not per_program:
        return ComparisonReport()

    report = ComparisonReport(per_program=per_program, baseline=dict(baseline or {}))
    report.win_rate = win_rate(per_program)

    if baseline:
        for technique in report.techniques:
            programs = [p for p in per_program if technique in per_program[p] and p in baseline]
            if not programs:
                continue
            summary = slowdown_over_baseline(
                {p: per_program[p][technique] for p in programs},
                {p: baseline[p] for p in programs},
            )
            report.slowdown[technique] = SlowdownAggregate(mean=summary.mean, median=summary.median)

    sides = list(histogram_sides or report.techniques[:2])
    if len(sides) == 2:
        programs = [p for p in per_program if sides[0] in per_program[p] and sides[1] in per_program[p]]
        report.histogram = head_to_head_histogram(
            {p: per_program[p][sides[0]] for p in programs},
            {p: per_program[p][sides[1]] for p in programs},
            bucket_width_pct=bucket_width_pct,
        )
        report.histogram_sides = sides

    return report


def size_slice(
    per_program: Mapping[str, Mapping[str, float]],
    input_sizes: Mapping[str, int],
    baseline: Optional[Mapping[str, float]] = None,
    thresholds: Sequence[int] = DEFAULT_SIZE_THRESHOLDS,
    histogram_sides: Optional[Sequence[str]] = None,
) -> Dict[int, ComparisonReport]:
    """
    Recompute the comparison on programs whose inputs stay below each threshold.

    Args:
        per_program: program -> technique -> mean cost
        input_sizes: program -> largest benchmark input size in bytes
        baseline: program -> default-test cost
        thresholds: Size limits in bytes
        histogram_sides: Techniques for the histogram

    Returns:
        threshold -> report (empty report when no program qualifies)
    """
    slices = {}
    for threshold in thresholds:
        programs = [p for p in per_program if p in input_sizes and input_sizes[p] < threshold]
        sliced = {p: per_program[p] for p in programs}
        sliced_baseline = {p: baseline[p] for p in programs if baseline and p in baseline}
        slices[threshold] = build_comparison_report(sliced, sliced_baseline or None, histogram_sides)
        if not programs:
            logger.info(f"Size slice < {threshold} bytes is empty")
    return slices


def discrimination_report(hit_costs: Sequence[float], miss_costs: Sequence[float]) -> DiscriminationReport:
    """Compare costs of inputs that satisfy a constraint against those that do not."""
    hit_mean = float(np.mean(hit_costs)) if len(hit_costs) else 0.0
    miss_mean = float(np.mean(miss_costs)) if len(miss_costs) else 0.0
    test = None
    if len(hit_costs) and len(miss_costs):
        test = mann_whitney_u(hit_costs, miss_costs, Alternative.GREATER)
    return DiscriminationReport(
        hit_count=len(hit_costs),
        miss_count=len(miss_costs),
        hit_mean_cost=hit_mean,
        miss_mean_cost=miss_mean,
        ratio=hit_mean / miss_mean if miss_mean > 0 else None,
        test=test,
    )


def report_rows(report: ComparisonReport) -> pd.DataFrame:
    """One row per program per technique."""
    rows = []
    for program, costs in report.per_program.items():
        for technique, cost in sorted(costs.items()):
            base = report.baseline.get(program)
            rows.append({
                "program_id": program,
                "technique": technique,
                "mean_cost": cost,
                "ratio_vs_baseline": cost / base if base else None,
            })
    return pd.DataFrame(rows, columns=["program_id", "technique", "mean_cost", "ratio_vs_baseline"])


def summary_table(report: ComparisonReport) -> str:
    """
    Plain-text summary: technique, avg/median cost, win rate, avg/median slowdown.

    Args:
        report: Comparison report

    Returns:
        Formatted table
    """
    lines = ["=" * 88, "BENCHMARK COMPARISON", "=" * 88]
    if report.empty:
        lines.append("(no programs)")
        lines.append("=" * 88)
        return "\n".join(lines)

    lines.append(
        f"{'Technique':<20}{'Avg cost':>14}{'Median cost':>14}{'Win rate':>10}"
        f"{'Avg slowdown':>15}{'Med slowdown':>15}"
    )
    lines.append("-" * 88)
    for technique in report.techniques:
        costs = [c[technique] for c in report.per_program.values() if technique in c]
        slowdown = report.slowdown.get(technique)
        avg_slow = f"{slowdown.mean:.2f}x" if slowdown else "-"
        med_slow = f"{slowdown.median:.2f}x" if slowdown else "-"
        lines.append(
            f"{technique:<20}{np.mean(costs):>14.1f}{lower_median(costs):>14.1f}"
            f"{report.win_rate.get(technique, 0.0):>10.2%}{avg_slow:>15}{med_slow:>15}"
        )
    lines.append(f"Programs compared: {len(report.per_program)}")
    lines.append("=" * 88)
    return "\n".join(lines)


def write_reports(
    out_dir,
    report: ComparisonReport,
    slices: Optional[Dict[int, ComparisonReport]] = None,
    discrimination: Optional[Dict[str, DiscriminationReport]] = None,
) -> List[Path]:
    """
    Write report.json, report.csv and summary.txt.

    Returns:
        Paths written
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    document = {
        "report": report.model_dump(mode="json"),
        "size_slices": {str(k): v.model_dump(mode="json") for k, v in (slices or {}).items()},
        "discrimination": {k: v.model_dump(mode="json") for k, v in sorted((discrimination or {}).items())},
    }
    json_path = out / "report.json"
    json_path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    csv_path = out / "report.csv"
    report_rows(report).to_csv(csv_path, index=False)

    text_path = out / "summary.txt"
    text_path.write_text(summary_table(report) + "\n", encoding="utf-8")

    return [json_path, csv_path, text_path]
