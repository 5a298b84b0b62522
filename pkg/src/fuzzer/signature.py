"""
Feedback signatures.

A signature is what the fuzzer considers "new behaviour": the set of checkers
an input reached, a digest of bucketed line coverage when a profile is
available, and the class of the process outcome.
"""

import hashlib
from enum import Enum
from typing import FrozenSet, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..harness.models import ExecutionResult, ExitKind, LineProfile


class OutcomeClass(str, Enum):
    """Coarse outcome used in signatures."""
    OK = "ok"
    CONSTRAINT_ABORT = "constraint_abort"
    NONZERO = "nonzero"
    TIMEOUT = "timeout"


# Signals and OOM kills count as ordinary failures
_OUTCOME_BY_EXIT = {
    ExitKind.OK: OutcomeClass.OK,
    ExitKind.CONSTRAINT_ABORT: OutcomeClass.CONSTRAINT_ABORT,
    ExitKind.NONZERO: OutcomeClass.NONZERO,
    ExitKind.SIGNALED: OutcomeClass.NONZERO,
    ExitKind.OOM: OutcomeClass.NONZERO,
    ExitKind.TIMEOUT: OutcomeClass.TIMEOUT,
}

# Lower bounds of the hit-count classes: 1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+
_BUCKET_FLOORS = (128, 32, 16, 8, 4, 3, 2, 1)


def hit_bucket(count: int) -> int:
    """
    Map a hit count to the lower bound of its class.

    Returns:
        0 for unexecuted lines, otherwise one of 1, 2, 3, 4, 8, 16, 32, 128
    """
    for floor in _BUCKET_FLOORS:
        if count >= floor:
            return floor
    return 0


def coverage_digest(profile: LineProfile) -> str:
    """Stable hash of the executed lines and their hit classes."""
    parts = sorted(
        f"{line}:{hit_bucket(count)}" for line, count in profile.hits.items() if count > 0
    )
    return hashlib.sha256("\n".join(parts).encode("ascii")).hexdigest()


class FeedbackSignature(BaseModel):
    """Behaviour fingerprint of one execution."""

    model_config = ConfigDict(frozen=True)

    checker_hits: FrozenSet[str] = Field(default_factory=frozenset)
    coverage_digest: Optional[str] = None
    outcome_class: OutcomeClass = OutcomeClass.OK

    def key(self) -> str:
        """Canonical string form (hashable and order-independent)."""
        hits = ",".join(sorted(self.checker_hits))
        return f"{self.outcome_class.value}|{hits}|{self.coverage_digest or '-'}"


def feedback_signature(
    result: ExecutionResult,
    profile: Optional[LineProfile] = None,
    mask_hits: bool = False,
) -> FeedbackSignature:
    """
    Compute the signature of an execution.

    Args:
        result: Execution result
        profile: Line profile of the same run, when collected
        mask_hits: Drop checker hits from the signature (ablation without
            instrumentation feedback)

    Returns:
        Feedback signature
    """
    return FeedbackSignature(
        checker_hits=frozenset() if mask_hits else result.checker_hits,
        coverage_digest=coverage_digest(profile) if profile is not None else None,
        outcome_class=_OUTCOME_BY_EXIT[result.exit.kind],
    )
