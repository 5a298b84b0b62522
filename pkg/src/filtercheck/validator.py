"""
Input validators.

A validator is a Python script that reads one input on stdin and exits 0 when
the input satisfies the problem's constraints. Synthesis is
programming-by-example: every official test must be accepted, and each
rejection is fed back to the provider until the script accepts them all.
"""

import asyncio
import json
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from ..constraints.parsing import code_block
from ..constraints.prompts import render_repair_prompt, render_validator_prompt
from ..constraints.providers import Conversation
from ..corpus.models import Problem, TestInput
from ..harness.executor import Harness
from ..harness.models import BuildArtifact, ExitKind
from ..pipeline.errors import BuildFailed, ValidatorCrash, ValidatorSynthesisFailed, WedgeError
from ..pipeline.logger import get_logger

logger = get_logger(__name__)

VALIDATOR_LANGUAGE = "python3"
DEFAULT_TIMEOUT = 10.0
DEFAULT_MAX_ROUNDS = 5
PREVIEW_BYTES = 300


class ValidatorArtifact(BaseModel):
    """A validator put into service for one problem."""

    model_config = ConfigDict(frozen=True)

    problem_id: str
    entry: str
    rounds_used: int = Field(ge=1, le=DEFAULT_MAX_ROUNDS)
    accepted_all_official: bool
    timeout: float = DEFAULT_TIMEOUT
    build: BuildArtifact


class Rejection(BaseModel):
    """An official test the candidate validator refused."""

    test_id: str
    reason: str
    preview: str


async def run_validator(
    harness: Harness,
    artifact: BuildArtifact,
    test_input: TestInput,
    timeout: float = DEFAULT_TIMEOUT,
) -> Tuple[bool, str]:
    """
    Run a validator build on one input.

    Returns:
        Tuple of (accepted, stderr text)

    Raises:
        ValidatorCrash: Validator timed out, was killed, or could not be run
    """
    limits = harness.limits.model_copy(update={"wall_timeout": timeout})
    try:
        result = await harness.execute(artifact, test_input, limits=limits)
    except WedgeError as e:
        raise ValidatorCrash(f"validator could not run on {test_input.id}: {e}") from e

    stderr = result.stderr.decode("utf-8", errors="replace")
    if result.exit.kind == ExitKind.OK:
        return True, stderr
    if result.exit.kind == ExitKind.NONZERO:
        return False, stderr
    raise ValidatorCrash(
        f"validator {result.exit.kind.value} on {test_input.id}: {stderr.strip()[-500:]}"
    )


async def validate_input(harness: Harness, validator: ValidatorArtifact, test_input: TestInput) -> bool:
    """
    Check one candidate input.

    A crashing or hanging validator counts as a rejection.

    Returns:
        True iff the validator exits 0 within its timeout
    """
    try:
        accepted, _ = await run_validator(harness, validator.build, test_input, validator.timeout)
        return accepted
    except ValidatorCrash as e:
        logger.warning(f"⚠️ {e}; treating input as invalid", extra={"problem_id": validator.problem_id})
        return False


def input_validator_for(harness: Harness, validator: ValidatorArtifact):
    """Async predicate over inputs, as used by the mutator dry run."""

    async def check(test_input: TestInput) -> bool:
        return await validate_input(harness, validator, test_input)

    return check


async def check_officials(
    harness: Harness,
    artifact: BuildArtifact,
    tests: Sequence[TestInput],
    timeout: float = DEFAULT_TIMEOUT,
) -> List[Rejection]:
    """Run a candidate validator over the official tests and collect its rejections."""

    async def one(test: TestInput) -> Optional[Rejection]:
        try:
            accepted, stderr = await run_validator(harness, artifact, test, timeout)
        except ValidatorCrash as e:
            accepted, stderr = False, str(e)
        if accepted:
            return None
        preview = test.input_bytes[:PREVIEW_BYTES].decode("utf-8", errors="replace")
        return Rejection(test_id=test.id, reason=stderr.strip()[-500:] or "exited nonzero", preview=preview)

    results = await asyncio.gather(*(one(t) for t in tests))
    return [r for r in results if r is not None]


def rejection_feedback(rejections: Sequence[Rejection]) -> str:
    parts = [f"The validator rejected {len(rejections)} valid official input(s). A validator must "
             "never reject a valid input."]
    for rejection in rejections[:3]:
        parts.append(f"Input {rejection.test_id}:\n{rejection.preview}\nValidator said: {rejection.reason}")
    return "\n\n".join(parts)


async def synthesize_validator(
    conversation: Conversation,
    harness: Harness,
    problem: Problem,
    work_dir,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    timeout: float = DEFAULT_TIMEOUT,
) -> ValidatorArtifact:
    """
    Generate a validator that accepts every official test.

    Args:
        conversation: Fresh provider conversation
        harness: Harness used to syntax-check and run candidates
        problem: Problem with official tests
        work_dir: Directory for candidates, validator.py and validator.json
        max_rounds: Repair rounds before giving up
        timeout: Per-input validator deadline

    Returns:
        Validator artifact with accepted_all_official=True

    Raises:
        ValidatorSynthesisFailed: No candidate accepted all officials within max_rounds
        ProviderError: Provider failed
    """
    officials = problem.official_tests
    if not officials:
        raise ValidatorSynthesisFailed(f"problem {problem.id} has no official tests to validate against")

    out = Path(work_dir)
    out.mkdir(parents=True, exist_ok=True)
    reply = await conversation.ask(render_validator_prompt(problem))

    for round_no in range(1, max_rounds + 1):
        source = code_block(reply) or reply
        (out / f"validator_round_{round_no}.py").write_text(source, encoding="utf-8")

        try:
            build = await harness.build_source(
                f"validator-{problem.id}", VALIDATOR_LANGUAGE, source, variant=f"round{round_no}"
            )
            rejections = await check_officials(harness, build, officials, timeout)
            failure = rejection_feedback(rejections) if rejections else ""
        except BuildFailed as e:
            failure = f"The validator does not compile:\n{e.log[-1500:]}"

        if not failure:
            final = out / "validator.py"
            final.write_text(source, encoding="utf-8")
            artifact = ValidatorArtifact(
                problem_id=problem.id,
                entry=str(final),
                rounds_used=round_no,
                accepted_all_official=True,
                timeout=timeout,
                build=build,
            )
            (out / "validator.json").write_text(
                json.dumps(artifact.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            conversation.write(out)
            logger.info(
                f"🛡️ Validator for {problem.id} accepted all {len(officials)} official tests "
                f"in round {round_no}",
                extra={"problem_id": problem.id, "round": round_no},
            )
            return artifact

        logger.info(
            f"Validator round {round_no} for {problem.id} failed: {failure.splitlines()[0]}",
            extra={"problem_id": problem.id, "round": round_no},
        )
        if round_no < max_rounds:
            reply = await conversation.ask(render_repair_prompt("validator", problem.id, "", failure))

    conversation.write(out)
    raise ValidatorSynthesisFailed(
        f"no validator for {problem.id} accepted every official test after {max_rounds} rounds",
        transcript=conversation.transcript(),
    )


def load_validator(directory) -> ValidatorArtifact:
    """Read validator.json."""
    return ValidatorArtifact.model_validate_json((Path(directory) / "validator.json").read_text())
