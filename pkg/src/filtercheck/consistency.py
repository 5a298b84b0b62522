"""
Cross-solution consistency check.

Correct solutions must agree on a valid input. An input on which too many of
them disagree is probably outside the problem's constraints (or has several
valid answers) and is dropped.
"""

import asyncio
from collections import Counter
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..corpus.models import TestInput, normalize_output
from ..harness.executor import Harness
from ..harness.models import BuildArtifact, ExecutionLimits
from ..pipeline.errors import WedgeError
from ..pipeline.logger import get_logger
from .validator import ValidatorArtifact, validate_input

logger = get_logger(__name__)

DEFAULT_THRESHOLD = 0.95
# 19/20 must count as exactly 95%
_EPSILON = 1e-9


class ConsistencyVerdict(BaseModel):
    """Agreement of the correct solutions on one input."""

    model_config = ConfigDict(frozen=True)

    input_id: str
    agreement_fraction: float = Field(ge=0.0, le=1.0)
    majority_output: str = ""
    keep: bool
    threshold: float = DEFAULT_THRESHOLD

    @model_validator(mode="after")
    def check_keep(self) -> "ConsistencyVerdict":
        if self.keep != is_consistent(self.agreement_fraction, self.threshold):
            raise ValueError("keep must follow from agreement_fraction and threshold")
        return self


def is_consistent(agreement_fraction: float, threshold: float = DEFAULT_THRESHOLD) -> bool:
    """Inconsistent share (1 - agreement) must not exceed 1 - threshold."""
    return agreement_fraction + _EPSILON >= threshold


def majority_verdict(
    input_id: str,
    outputs: Sequence[Optional[str]],
    threshold: float = DEFAULT_THRESHOLD,
) -> ConsistencyVerdict:
    """
    Reduce per-solution outputs to a verdict.

    Args:
        input_id: Input the outputs belong to
        outputs: Normalized stdout per solution; None for failed runs (always disagreeing)
        threshold: Minimum agreement to keep the input

    Returns:
        Consistency verdict
    """
    counts = Counter(o for o in outputs if o is not None)
    if not counts or not outputs:
        return ConsistencyVerdict(
            input_id=input_id, agreement_fraction=0.0, keep=is_consistent(0.0, threshold), threshold=threshold
        )
    # Most common output; ties go to the smallest text
    majority, count = min(counts.items(), key=lambda item: (-item[1], item[0]))
    agreement = count / len(outputs)
    return ConsistencyVerdict(
        input_id=input_id,
        agreement_fraction=agreement,
        majority_output=majority,
        keep=is_consistent(agreement, threshold),
        threshold=threshold,
    )


async def consistency_filter(
    harness: Harness,
    solutions: Sequence[BuildArtifact],
    test_input: TestInput,
    threshold: float = DEFAULT_THRESHOLD,
    limits: Optional[ExecutionLimits] = None,
) -> ConsistencyVerdict:
    """
    Run every correct solution on an input and compare their outputs.

    Timeouts, crashes and nonzero exits count as disagreeing.

    Args:
        harness: Harness running the solutions
        solutions: Builds of the problem's correct solutions (at least two)
        test_input: Candidate input
        threshold: Minimum agreement to keep the input

    Returns:
        Consistency verdict
    """
    if len(solutions) < 2:
        raise ValueError("consistency check needs at least two correct solutions")

    async def output_of(artifact: BuildArtifact) -> Optional[str]:
        try:
            result = await harness.execute(artifact, test_input, limits=limits)
        except WedgeError as e:
            logger.debug(f"{artifact.solution_id} could not run {test_input.id}: {e}")
            return None
        return normalize_output(result.stdout) if result.exit.ok else None

    outputs = await asyncio.gather(*(output_of(a) for a in solutions))
    return majority_verdict(test_input.id, outputs, threshold)


class FilterOutcome(BaseModel):
    """Candidates surviving validity and consistency filtering."""

    kept: List[TestInput] = Field(default_factory=list)
    invalid: List[str] = Field(default_factory=list)
    inconsistent: List[ConsistencyVerdict] = Field(default_factory=list)


async def filter_candidates(
    harness: Harness,
    validator: Optional[ValidatorArtifact],
    solutions: Sequence[BuildArtifact],
    candidates: Sequence[TestInput],
    threshold: float = DEFAULT_THRESHOLD,
    limits: Optional[ExecutionLimits] = None,
) -> FilterOutcome:
    """
    Apply the validator, then the consistency check, to every candidate.

    Args:
        harness: Harness
        validator: Validator in service (None skips the validity step)
        solutions: Correct solution builds
        candidates: Generated inputs
        threshold: Consistency threshold

    Returns:
        Filter outcome in candidate order
    """
    outcome = FilterOutcome()
    check_consistency = len(solutions) >= 2
    if not check_consistency:
        logger.warning(f"⚠️ Only {len(solutions)} correct solution build(s); skipping the consistency check")

    for candidate in candidates:
        if validator is not None and not await validate_input(harness, validator, candidate):
            outcome.invalid.append(candidate.id)
            continue
        if not check_consistency:
            outcome.kept.append(candidate)
            continue
        verdict = await consistency_filter(harness, solutions, candidate, threshold, limits)
        if verdict.keep:
            outcome.kept.append(candidate)
        else:
            outcome.inconsistent.append(verdict)

    logger.info(
        f"🧪 {len(outcome.kept)}/{len(candidates)} candidates kept "
        f"({len(outcome.invalid)} invalid, {len(outcome.inconsistent)} inconsistent)"
    )
    return outcome
