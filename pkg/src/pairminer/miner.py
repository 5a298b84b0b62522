"""
Contrastive pair mining.

Picks the most similar pair of default tests whose costs differ by at least
the configured ratio, and renders the side-by-side hit-count report that the
constraint reasoner reads.
"""

from itertools import combinations
from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field

from ..corpus.models import TestInput
from ..harness.models import CostMeasurement, LineProfile
from ..pipeline.errors import BothEmpty, EmptySample, NoQualifyingPair, ProfileMismatch, ZeroMean
from ..pipeline.logger import get_logger
from ..stats.metrics import coefficient_of_variation
from .similarity import SimilarityScore, similarity, tokenize

logger = get_logger(__name__)

DEFAULT_PREVIEW_BYTES = 4096


class ContrastivePair(BaseModel):
    """A (slow, fast) pair of default tests."""

    model_config = ConfigDict(frozen=True)

    slow: str
    fast: str
    similarity: SimilarityScore
    cost_ratio: float = Field(ge=1.0)
    slow_cost: float = 0.0
    fast_cost: float = 0.0


class DiffLine(BaseModel):
    """One source line with both hit counts."""

    model_config = ConfigDict(frozen=True)

    line_number: int
    source: str
    slow_hits: int
    fast_hits: int


class ProfileDiff(BaseModel):
    """Aligned hit counts of the slow and fast runs."""

    model_config = ConfigDict(frozen=True)

    solution_id: str
    source_lines: List[DiffLine]
    slow_input_preview: str
    fast_input_preview: str

    def render(self) -> str:
        """Deterministic plain-text report, one line per source line."""
        return "\n".join(
            f"{line.line_number:>5} | slow:{line.slow_hits:>8} fast:{line.fast_hits:>8} | {line.source}"
            for line in self.source_lines
        )

    def hottest_lines(self, limit: int = 5) -> List[DiffLine]:
        """Lines with the largest slow/fast hit difference."""
        ranked = sorted(self.source_lines, key=lambda l: (-(l.slow_hits - l.fast_hits), l.line_number))
        return [l for l in ranked[:limit] if l.slow_hits > l.fast_hits]


def mine_pair(
    tests: List[TestInput],
    costs: Dict[str, CostMeasurement],
    min_cost_ratio: float = 2.0,
) -> ContrastivePair:
    """
    Select the top contrastive pair.

    Every unordered pair is labelled slow/fast by mean cost; pairs below
    min_cost_ratio are dropped; the rest are ranked by similarity, then cost
    ratio, then ids.

    Args:
        tests: Default tests (at least two)
        costs: Cost measurement per test id
        min_cost_ratio: Minimum slow/fast ratio

    Returns:
        The first-ranked pair

    Raises:
        NoQualifyingPair: No pair reaches min_cost_ratio
    """
    if len(tests) < 2:
        raise NoQualifyingPair("need at least two tests to mine a pair")
    missing = [t.id for t in tests if t.id not in costs]
    if missing:
        raise ValueError(f"no cost measurement for tests: {', '.join(missing)}")

    tokens = {t.id: tokenize(t.input_bytes) for t in tests}
    candidates = []

    for a, b in combinations(sorted(tests, key=lambda t: t.id), 2):
        cost_a, cost_b = costs[a.id].mean_cost, costs[b.id].mean_cost
        slow, fast = (a, b) if cost_a >= cost_b else (b, a)
        slow_cost, fast_cost = max(cost_a, cost_b), min(cost_a, cost_b)

        if fast_cost > 0:
            if slow_cost < min_cost_ratio * fast_cost:
                continue
            ratio = slow_cost / fast_cost
        else:
            # A zero-cost fast run cannot be divided by; the slow cost stands in for the ratio
            ratio = slow_cost
            if ratio < max(min_cost_ratio, 1.0):
                continue

        try:
            score = similarity(tokens[slow.id], tokens[fast.id])
        except BothEmpty:
            score = SimilarityScore(match_ratio=0.0, jaccard=0.0)

        candidates.append(ContrastivePair(
            slow=slow.id,
            fast=fast.id,
            similarity=score,
            cost_ratio=ratio,
            slow_cost=slow_cost,
            fast_cost=fast_cost,
        ))

    if not candidates:
        raise NoQualifyingPair(f"no test pair reaches cost ratio {min_cost_ratio}")

    candidates.sort(key=lambda p: (-p.similarity.total, -p.cost_ratio, p.slow, p.fast))
    best = candidates[0]
    logger.debug(
        f"Mined pair slow={best.slow} fast={best.fast} "
        f"similarity={best.similarity.total:.3f} ratio={best.cost_ratio:.2f}"
    )
    return best


def preview(input_bytes: bytes, budget: int = DEFAULT_PREVIEW_BYTES) -> str:
    """Decode an input for a prompt, truncating past the byte budget."""
    if len(input_bytes) <= budget:
        return input_bytes.decode("utf-8", errors="replace")
    head = input_bytes[:budget].decode("utf-8", errors="ignore")
    return f"{head}\n... [truncated {len(input_bytes) - budget} bytes]"


def build_profile_diff(
    source: str,
    slow_profile: LineProfile,
    fast_profile: LineProfile,
    slow: TestInput,
    fast: TestInput,
    preview_bytes: int = DEFAULT_PREVIEW_BYTES,
) -> ProfileDiff:
    """
    Align the slow and fast line profiles against the source.

    Args:
        source: Solution source text
        slow_profile: Profile of the slow input
        fast_profile: Profile of the fast input
        slow: Slow test input
        fast: Fast test input
        preview_bytes: Preview budget per input

    Returns:
        Profile diff covering every source line once

    Raises:
        ProfileMismatch: Profiles belong to different solutions
    """
    if slow_profile.solution_id != fast_profile.solution_id:
        raise ProfileMismatch(
            f"profiles belong to {slow_profile.solution_id} and {fast_profile.solution_id}"
        )

    lines = source.splitlines()
    last_line = max([len(lines), *slow_profile.hits.keys(), *fast_profile.hits.keys()], default=0)

    return ProfileDiff(
        solution_id=slow_profile.solution_id,
        source_lines=[
            DiffLine(
                line_number=n,
                source=lines[n - 1] if n <= len(lines) else "",
                slow_hits=slow_profile.hits.get(n, 0),
                fast_hits=fast_profile.hits.get(n, 0),
            )
            for n in range(1, last_line + 1)
        ],
        slow_input_preview=preview(slow.input_bytes, preview_bytes),
        fast_input_preview=preview(fast.input_bytes, preview_bytes),
    )


def select_solutions_for_mining(
    cost_tables: Dict[str, Dict[str, CostMeasurement]],
    limit: int,
) -> List[str]:
    """
    Choose at most `limit` solutions of a problem to mine.

    Solutions whose default-test costs vary most come first, then by id.
    """
    def spread(solution_id: str) -> float:
        try:
            return coefficient_of_variation([m.mean_cost for m in cost_tables[solution_id].values()])
        except (EmptySample, ZeroMean):
            return 0.0

    ranked = sorted(cost_tables, key=lambda sid: (-spread(sid), sid))
    return ranked[:limit]
