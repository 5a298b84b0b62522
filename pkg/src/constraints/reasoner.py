"""
Constraint reasoning and the per-solution constraint phase.
"""

import json
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, Field

from ..corpus.models import LANGUAGE_EXTENSIONS, Problem, Solution
from ..harness.executor import Harness
from ..pairminer.miner import ContrastivePair, ProfileDiff
from ..pipeline.errors import ProfileMismatch, UnparseableResponse
from ..pipeline.logger import get_logger
from .instrument import (
    CheckerSpec,
    InstrumentedProgram,
    ValidationReport,
    implement_checkers,
    validate_instrumentation,
)
from .parsing import NLInvariant, copies_slow_input, parse_invariants
from .prompts import render_reasoning_prompt, render_repair_prompt
from .providers import Conversation

logger = get_logger(__name__)

NO_INVARIANTS_MESSAGE = (
    'No invariants could be read from the answer. List them as a numbered list '
    'directly under a line reading "PERFORMANCE INVARIANTS:".'
)


class ConstraintResult(BaseModel):
    """Everything the constraint phase produced for one solution."""

    solution_id: str
    invariants: List[NLInvariant] = Field(default_factory=list)
    checkers: List[CheckerSpec] = Field(default_factory=list)
    instrumented: Optional[InstrumentedProgram] = None
    validation: Optional[ValidationReport] = None


def _usable(invariants: List[NLInvariant], slow_input: Optional[bytes]) -> List[NLInvariant]:
    """Drop invariants quoting the slow input and renumber the rest."""
    if slow_input is None:
        return invariants
    kept = []
    for inv in invariants:
        if copies_slow_input(inv.text, slow_input):
            logger.warning(f"Dropping invariant that quotes the slow input: {inv.text[:80]}")
            continue
        kept.append(inv)
    return [inv.model_copy(update={"id": f"inv_{i}"}) for i, inv in enumerate(kept, start=1)]


async def reason_constraints(
    conversation: Conversation,
    problem: Problem,
    solution: Solution,
    pair: ContrastivePair,
    diff: ProfileDiff,
    slow_input: Optional[bytes] = None,
) -> List[NLInvariant]:
    """
    Derive natural-language performance invariants.

    Args:
        conversation: Fresh conversation with the provider
        problem: Problem statement source
        solution: Analyzed solution
        pair: Mined contrastive pair of the solution
        diff: Profile diff of the pair
        slow_input: Raw slow input, used to reject literal copies

    Returns:
        At least one invariant

    Raises:
        ProfileMismatch: diff belongs to another solution
        UnparseableResponse: No invariants after one re-prompt
        ProviderError: Provider failed
    """
    if diff.solution_id != solution.id:
        raise ProfileMismatch(f"profile diff of {diff.solution_id} given for {solution.id}")

    response = await conversation.ask(render_reasoning_prompt(problem, solution, diff))
    invariants = _usable(parse_invariants(response), slow_input)
    if not invariants:
        logger.info("No invariants parsed; re-prompting", extra={"solution_id": solution.id})
        response = await conversation.ask(
            render_repair_prompt("reason", problem.id, solution.id, NO_INVARIANTS_MESSAGE)
        )
        invariants = _usable(parse_invariants(response), slow_input)
    if not invariants:
        raise UnparseableResponse(f"no performance invariants for {solution.id} after one re-prompt")

    logger.info(
        f"💡 {len(invariants)} invariant(s) for {solution.id} (pair {pair.slow}/{pair.fast})",
        extra={"solution_id": solution.id, "problem_id": problem.id},
    )
    return invariants


async def derive_constraints(
    conversation: Conversation,
    harness: Harness,
    problem: Problem,
    solution: Solution,
    pair: ContrastivePair,
    diff: ProfileDiff,
    out_dir,
) -> ConstraintResult:
    """
    Run reasoning, checker implementation and validation for one solution.

    Writes invariants.json, checkers.json, instrumented.<ext>,
    validation.json and the prompt/response transcript into out_dir. The
    transcript is written even when a step fails.

    Returns:
        Constraint result for the solution
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = ConstraintResult(solution_id=solution.id)

    try:
        slow = problem.get_test(pair.slow)
        result.invariants = await reason_constraints(
            conversation, problem, solution, pair, diff, slow_input=slow.input_bytes
        )
        _write_json(out / "invariants.json", [inv.model_dump(mode="json") for inv in result.invariants])

        checkers, program, artifact = await implement_checkers(
            conversation, harness, problem, result.invariants, solution
        )
        result.checkers, result.instrumented = checkers, program
        _write_json(out / "checkers.json", [c.model_dump(mode="json") for c in checkers])
        original = await harness.build(solution)
        result.validation = await validate_instrumentation(
            harness, artifact, original, problem.default_tests, pair
        )
        _write_json(out / "validation.json", result.validation.model_dump(mode="json"))
        ext = LANGUAGE_EXTENSIONS.get(solution.language, solution.language)
        (out / f"instrumented.{ext}").write_text(program.source, encoding="utf-8")
        if not result.validation.pair_discriminating:
            logger.warning(
                f"Checkers of {solution.id} do not separate the slow input from the fast one",
                extra={"solution_id": solution.id},
            )
    finally:
        conversation.write(out)

    return result


def load_constraint_result(directory, solution_id: str) -> ConstraintResult:
    """Read a constraint phase output directory back."""
    path = Path(directory)
    result = ConstraintResult(solution_id=solution_id)
    if (path / "invariants.json").is_file():
        result.invariants = [
            NLInvariant.model_validate(d) for d in json.loads((path / "invariants.json").read_text())
        ]
    if (path / "checkers.json").is_file():
        result.checkers = [
            CheckerSpec.model_validate(d) for d in json.loads((path / "checkers.json").read_text())
        ]
    sources = sorted(path.glob("instrumented.*"))
    if sources and result.checkers:
        ext = sources[0].suffix.lstrip(".")
        language = next((lang for lang, e in LANGUAGE_EXTENSIONS.items() if e == ext), ext)
        result.instrumented = InstrumentedProgram(
            solution_id=solution_id,
            language=language,
            source=sources[0].read_text(encoding="utf-8"),
            checker_ids=frozenset(c.checker_id for c in result.checkers),
        )
    if (path / "validation.json").is_file():
        result.validation = ValidationReport.model_validate_json((path / "validation.json").read_text())
    return result


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
