"""
Problem filtering and ranking.

Drops problems that are too small, too cheap or that accept several answers,
then ranks the survivors by how much their solutions' costs vary.
"""

from collections import Counter
from typing import Dict, List, Mapping, Optional, Tuple

from ..harness.models import SolutionCosts
from ..pipeline.errors import MissingProfiles, ZeroMean
from ..pipeline.logger import get_logger
from ..stats.metrics import coefficient_of_variation
from .models import Corpus, FilterCriteria, Problem, normalize_output

logger = get_logger(__name__)

DEFAULT_AGREEMENT_FRACTION = 0.95


def detect_multi_output(
    problem: Problem,
    runs: Mapping[Tuple[str, str], bytes],
    agreement_fraction: float = DEFAULT_AGREEMENT_FRACTION,
) -> bool:
    """
    Decide whether a problem accepts more than one correct output.

    Args:
        problem: Problem to inspect
        runs: (solution_id, test_id) -> stdout of correct solutions on official tests
        agreement_fraction: Share of solutions that must print the same answer

    Returns:
        True if any official test has agreement below the fraction
    """
    solution_ids = [s.id for s in problem.correct_solutions]

    for test in problem.official_tests:
        outputs = [normalize_output(runs[(sid, test.id)]) for sid in solution_ids if (sid, test.id) in runs]
        if not outputs:
            continue
        agreeing = Counter(outputs).most_common(1)[0][1]
        if agreeing / len(outputs) < agreement_fraction:
            logger.debug(
                f"{problem.id}: {agreeing}/{len(outputs)} solutions agree on test {test.id}",
                extra={"problem_id": problem.id},
            )
            return True
    return False


def filter_problems(
    corpus: Corpus,
    profiles: Mapping[str, List[SolutionCosts]],
    criteria: FilterCriteria,
    multi_output: Optional[Mapping[str, bool]] = None,
) -> List[Tuple[str, float]]:
    """
    Filter problems and rank survivors by coefficient of variation.

    Args:
        corpus: Loaded corpus
        profiles: problem_id -> default-test cost tables of its correct solutions
        criteria: Filter thresholds
        multi_output: problem_id -> detect_multi_output verdict (absent means single output)

    Returns:
        (problem_id, cv) sorted by descending cv then id, at most top_n_by_cv entries

    Raises:
        MissingProfiles: A problem that passes the count checks has no cost data
    """
    multi_output = multi_output or {}
    survivors: List[Tuple[str, float]] = []
    rejected: Dict[str, int] = Counter()

    for problem_id in sorted(corpus.problems):
        problem = corpus.problems[problem_id]
        correct = {s.id for s in problem.correct_solutions}

        if len(correct) < criteria.min_solutions:
            rejected["solutions"] += 1
            continue
        if len(problem.default_tests) < criteria.min_tests:
            rejected["tests"] += 1
            continue
        if criteria.require_single_output and multi_output.get(problem_id, False):
            rejected["multi_output"] += 1
            continue

        tables = [t for t in profiles.get(problem_id, []) if t.solution_id in correct and t.per_test]
        if not tables:
            raise MissingProfiles(problem_id)

        if max(t.max_cost for t in tables) <= criteria.min_instructions:
            rejected["cost"] += 1
            continue

        try:
            cv = coefficient_of_variation([t.mean_cost for t in tables])
        except ZeroMean:
            cv = 0.0
        survivors.append((problem_id, cv))

    survivors.sort(key=lambda item: (-item[1], item[0]))
    ranked = survivors[: criteria.top_n_by_cv]

    logger.info(
        f"🔎 Filter kept {len(ranked)}/{len(corpus.problems)} problems "
        f"(rejected: {dict(rejected) or 'none'})"
    )
    return ranked
