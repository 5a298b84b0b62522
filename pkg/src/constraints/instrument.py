"""
Checker implementation, abort gating and instrumentation validation.

Checker aborts are rewritten so they only fire when ``WEDGE_ABORT=1``; with
the variable unset an instrumented program reports its checker hits on stderr
and otherwise behaves exactly like the original.
"""

import asyncio
import re
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..corpus.models import Problem, Solution, TestInput, normalize_output
from ..harness.executor import ABORT_ENV, Harness
from ..harness.models import BuildArtifact, ExitKind
from ..pairminer.miner import ContrastivePair
from ..pipeline.errors import BuildFailed, OutputDivergence, UnparseableResponse
from ..pipeline.logger import get_logger
from .parsing import NLInvariant, checker_blocks, checker_ids_in, instrumented_block
from .prompts import render_checker_prompt, render_repair_prompt
from .providers import Conversation

logger = get_logger(__name__)

INSTRUMENTED_VARIANT = "instrumented"

_C_ABORT_RE = re.compile(r"(?<![\w.>])(?:std::)?abort\s*\(\s*\)\s*;")
_PY_ABORT_RE = re.compile(r"(?<![\w.])os\.abort\s*\(\s*\)")
_PY_IMPORT_OS_RE = re.compile(r"^\s*import\s+(?:[\w.]+\s*,\s*)*os\b", re.MULTILINE)

_CPP_GATE = (
    '{ const char* _wedge_abort = std::getenv("' + ABORT_ENV + '"); '
    "if (_wedge_abort && _wedge_abort[0] == '1' && _wedge_abort[1] == '\\0') std::abort(); }"
)
_C_GATE = (
    '{ const char* _wedge_abort = getenv("' + ABORT_ENV + '"); '
    "if (_wedge_abort && _wedge_abort[0] == '1' && _wedge_abort[1] == '\\0') abort(); }"
)
_PY_GATE = '(os.abort() if os.environ.get("' + ABORT_ENV + '") == "1" else None)'


class InsertionHint(str, Enum):
    """Where a checker was placed."""
    AFTER_INPUT_READ = "after_input_read"
    BEFORE_HOT_LOOP = "before_hot_loop"
    HELPER_FUNCTION = "helper_function"


class CheckerSpec(BaseModel):
    """One runtime check and the invariants it implements."""

    model_config = ConfigDict(frozen=True)

    checker_id: str
    invariant_id: str
    merged_invariant_ids: Tuple[str, ...] = ()
    code: str
    insertion_hint: InsertionHint = InsertionHint.AFTER_INPUT_READ

    @property
    def invariant_ids(self) -> Tuple[str, ...]:
        return (self.invariant_id, *self.merged_invariant_ids)


class InstrumentedProgram(BaseModel):
    """Solution source with gated checkers inserted."""

    model_config = ConfigDict(frozen=True)

    solution_id: str
    language: str
    source: str
    checker_ids: FrozenSet[str]
    abort_mode: str = "env_gated"

    @field_validator("checker_ids")
    @classmethod
    def validate_checkers(cls, v: FrozenSet[str]) -> FrozenSet[str]:
        if not v:
            raise ValueError("an instrumented program needs at least one checker")
        return v


class ValidationReport(BaseModel):
    """Outcome of comparing an instrumented program with its original."""

    solution_id: str
    tests_checked: int
    hits_per_test: Dict[str, List[str]] = Field(default_factory=dict)
    slow_hits: List[str] = Field(default_factory=list)
    fast_hits: List[str] = Field(default_factory=list)
    pair_discriminating: bool = False


def gate_aborts(source: str, language: str) -> str:
    """
    Wrap every checker abort in the WEDGE_ABORT gate.

    Sources that already mention WEDGE_ABORT are returned unchanged.

    Args:
        source: Instrumented source text
        language: Language tag

    Returns:
        Source with gated aborts
    """
    if ABORT_ENV in source:
        return source

    if language == "python3":
        gated = _PY_ABORT_RE.sub(_PY_GATE, source)
        if gated != source and not _PY_IMPORT_OS_RE.search(gated):
            gated = _insert_python_import(gated, "import os")
        return gated

    gate = _C_GATE if language == "c" else _CPP_GATE
    gated = _C_ABORT_RE.sub(gate, source)
    if gated != source:
        header = "#include <stdlib.h>" if language == "c" else "#include <cstdlib>"
        if header not in gated:
            gated = f"{header}\n{gated}"
    return gated


def _insert_python_import(source: str, statement: str) -> str:
    """Insert an import after a shebang, encoding line and __future__ imports."""
    lines = source.splitlines(keepends=True)
    index = 0
    while index < len(lines) and (
        lines[index].startswith("#!")
        or lines[index].startswith("# -*-")
        or lines[index].startswith("from __future__")
    ):
        index += 1
    lines.insert(index, statement + "\n")
    return "".join(lines)


def _insertion_hint(code: str) -> InsertionHint:
    if re.search(r"^\s*(def |void |bool |static |inline )", code, re.MULTILINE):
        return InsertionHint.HELPER_FUNCTION
    if re.search(r"\b(for|while)\b", code):
        return InsertionHint.BEFORE_HOT_LOOP
    return InsertionHint.AFTER_INPUT_READ


def parse_checker_response(
    response: str,
    invariants: Sequence[NLInvariant],
    solution: Solution,
) -> Tuple[List[CheckerSpec], InstrumentedProgram]:
    """
    Turn a checker response into checker specs and an instrumented program.

    Raises:
        UnparseableResponse: Envelope missing, an invariant is not covered or
            a checker is absent from the instrumented program
    """
    known = {inv.id for inv in invariants}
    source = instrumented_block(response)
    if source is None:
        raise UnparseableResponse("no fenced block tagged 'instrumented'")

    specs: Dict[str, CheckerSpec] = {}
    for ids, code in checker_blocks(response):
        orphans = [i for i in ids if i not in known]
        if orphans:
            logger.warning(f"Ignoring checker block for unknown invariants {orphans}")
        ids = [i for i in ids if i in known]
        if not ids:
            continue

        found = checker_ids_in(code)
        checker_id = found[0] if found else f"chk_{ids[0]}"
        previous = specs.get(checker_id)
        if previous is not None:
            ids = [i for i in dict.fromkeys([*previous.invariant_ids, *ids])]
            code = previous.code + "\n" + code
        specs[checker_id] = CheckerSpec(
            checker_id=checker_id,
            invariant_id=ids[0],
            merged_invariant_ids=tuple(ids[1:]),
            code=code,
            insertion_hint=_insertion_hint(code),
        )

    covered = {i for spec in specs.values() for i in spec.invariant_ids}
    uncovered = sorted(known - covered)
    if uncovered:
        raise UnparseableResponse(f"no checker block for invariants: {', '.join(uncovered)}")

    in_source = set(checker_ids_in(source))
    missing = sorted(set(specs) - in_source)
    if missing:
        raise UnparseableResponse(
            f"checkers not present in the instrumented program (missing WEDGE_CHECK_HIT lines): {', '.join(missing)}"
        )

    program = InstrumentedProgram(
        solution_id=solution.id,
        language=solution.language,
        source=gate_aborts(source, solution.language),
        checker_ids=frozenset(specs),
    )
    return sorted(specs.values(), key=lambda s: s.invariant_id), program


async def implement_checkers(
    conversation: Conversation,
    harness: Harness,
    problem: Problem,
    invariants: Sequence[NLInvariant],
    solution: Solution,
) -> Tuple[List[CheckerSpec], InstrumentedProgram, BuildArtifact]:
    """
    Ask for checkers, insert them and build the result.

    Each failure class (unusable envelope, compile error) gets one repair
    re-prompt carrying the failure text.

    Args:
        conversation: Conversation continuing from constraint reasoning
        harness: Harness used to build the instrumented program
        problem: Owning problem
        invariants: Invariants to implement (non-empty)
        solution: Original solution

    Returns:
        Tuple of (checker specs, instrumented program, built artifact)

    Raises:
        UnparseableResponse: Envelope still unusable after one repair
        BuildFailed: Instrumented source still fails to compile after one repair
        ProviderError: Provider failed
    """
    if not invariants:
        raise ValueError("implement_checkers needs at least one invariant")

    response = await conversation.ask(render_checker_prompt(problem, solution, invariants))
    parse_repaired = build_repaired = False
    build_logs: List[str] = []

    while True:
        try:
            specs, program = parse_checker_response(response, invariants, solution)
        except UnparseableResponse as e:
            if parse_repaired:
                raise
            parse_repaired = True
            logger.info(f"Checker response unusable ({e}); re-prompting", extra={"solution_id": solution.id})
            response = await conversation.ask(render_repair_prompt("checker", problem.id, solution.id, str(e)))
            continue

        try:
            artifact = await harness.build_source(
                solution.id, solution.language, program.source, variant=INSTRUMENTED_VARIANT
            )
        except BuildFailed as e:
            build_logs.append(e.log)
            if build_repaired:
                raise BuildFailed(e.log, logs=build_logs) from e
            build_repaired = True
            logger.info("Instrumented build failed; re-prompting with the compiler log",
                        extra={"solution_id": solution.id})
            failure = f"The instrumented program does not compile:\n{e.log[-4000:]}"
            response = await conversation.ask(render_repair_prompt("checker", problem.id, solution.id, failure))
            continue

        logger.info(
            f"🧩 Instrumented {solution.id} with {len(program.checker_ids)} checker(s)",
            extra={"solution_id": solution.id},
        )
        return specs, program, artifact


async def validate_instrumentation(
    harness: Harness,
    instrumented: BuildArtifact,
    original: BuildArtifact,
    default_tests: Sequence[TestInput],
    pair: Optional[ContrastivePair] = None,
) -> ValidationReport:
    """
    Check that instrumentation leaves stdout unchanged.

    Both programs run every default test with WEDGE_ABORT unset; their
    normalized stdout must match. Checker hits on the mined pair are recorded.

    Args:
        harness: Execution harness
        instrumented: Built instrumented program
        original: Built original program
        default_tests: Tests to compare on
        pair: Mined pair whose hits decide pair_discriminating

    Returns:
        Validation report

    Raises:
        OutputDivergence: Stdout differs on some test
    """
    async def run_both(test: TestInput):
        return await asyncio.gather(
            harness.execute(instrumented, test),
            harness.execute(original, test),
        )

    results = await asyncio.gather(*(run_both(t) for t in default_tests))
    report = ValidationReport(solution_id=instrumented.solution_id, tests_checked=len(default_tests))

    for test, (inst, orig) in zip(default_tests, results):
        if inst.exit.kind != orig.exit.kind:
            raise OutputDivergence(test.id, f"exit {inst.exit.kind.value} vs {orig.exit.kind.value}")
        if orig.exit.kind == ExitKind.OK and normalize_output(inst.stdout) != normalize_output(orig.stdout):
            raise OutputDivergence(test.id)
        report.hits_per_test[test.id] = sorted(inst.checker_hits)

    if pair is not None:
        report.slow_hits = report.hits_per_test.get(pair.slow, [])
        report.fast_hits = report.hits_per_test.get(pair.fast, [])
        report.pair_discriminating = bool(set(report.slow_hits) - set(report.fast_hits))

    return report
