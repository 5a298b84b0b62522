"""
Mutator synthesis.

Asks the provider for a constraint-aware mutator, dry-runs it as a plugin
process and feeds failures back until a candidate passes or the round limit
is reached, in which case the built-in mutator takes over.
"""

import hashlib
import json
import random
import time
from enum import Enum
from pathlib import Path
from typing import Awaitable, Callable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..constraints.parsing import NLInvariant, code_block
from ..constraints.prompts import render_mutator_prompt, render_repair_prompt
from ..constraints.providers import Conversation
from ..corpus.models import Origin, Problem, Solution, TestInput
from ..pairminer.miner import ProfileDiff
from ..pipeline.errors import WedgeError
from ..pipeline.logger import get_logger
from .protocol import DEFAULT_TIMEOUT, MutationRequest, PluginProcess

logger = get_logger(__name__)

BUILTIN_ENTRY = "builtin"
MAX_VALIDITY_SAMPLE = 100
DEFAULT_MAX_ROUNDS = 5

InputValidator = Callable[[TestInput], Awaitable[bool]]


class MutatorKind(str, Enum):
    """How a mutator is run."""
    PLUGIN_PROCESS = "plugin_process"
    BUILTIN = "builtin"


class DryRunReport(BaseModel):
    """Outcome of exercising a candidate mutator."""

    duration: float
    requests: int = 0
    inputs_produced: int = Field(default=0, ge=0)
    validity_checked: int = 0
    validity_valid: int = 0
    crashed: bool = False
    failure_message: str = ""

    @model_validator(mode="after")
    def check_failure_message(self) -> "DryRunReport":
        if self.crashed and not self.failure_message:
            raise ValueError("a crashed dry run needs a failure message")
        return self

    @property
    def validity_sample(self) -> Tuple[int, int]:
        """(checked, valid) counts of the sampled outputs."""
        return self.validity_checked, self.validity_valid

    def passed(self, min_validity: float = 0.10) -> bool:
        """Pass: no crash, at least one input, and enough sampled validity."""
        if self.crashed or self.inputs_produced < 1:
            return False
        if self.validity_checked:
            return self.validity_valid / self.validity_checked >= min_validity
        return True

    def failure_reason(self, min_validity: float = 0.10) -> str:
        if self.crashed:
            return self.failure_message
        if self.inputs_produced < 1:
            return "The mutator produced no new inputs during the dry run."
        return (
            f"Only {self.validity_valid} of {self.validity_checked} sampled outputs satisfy the input "
            f"constraints (need at least {min_validity:.0%}). Make the generated inputs follow the "
            "input format and bounds of the problem."
        )


class MutatorArtifact(BaseModel):
    """The mutator a campaign will use."""

    model_config = ConfigDict(frozen=True)

    solution_id: str
    kind: MutatorKind
    entry: str
    rounds_used: int = Field(default=0, ge=0, le=DEFAULT_MAX_ROUNDS)
    dry_run: Optional[DryRunReport] = None
    synthesis_exhausted: bool = False
    constraint_aware: bool = True

    @classmethod
    def builtin(cls, solution_id: str, rounds_used: int = 0, exhausted: bool = False,
                dry_run: Optional[DryRunReport] = None) -> "MutatorArtifact":
        return cls(
            solution_id=solution_id,
            kind=MutatorKind.BUILTIN,
            entry=BUILTIN_ENTRY,
            rounds_used=rounds_used,
            dry_run=dry_run,
            synthesis_exhausted=exhausted,
            constraint_aware=False,
        )


class MutatorContext(BaseModel):
    """Inputs to the mutator prompt."""

    problem: Problem
    solution: Solution
    invariants: List[NLInvariant] = Field(default_factory=list)
    diff: Optional[ProfileDiff] = None
    checker_code: List[str] = Field(default_factory=list)


async def synthesize_mutator(
    conversation: Conversation,
    context: MutatorContext,
    seeds: Sequence[TestInput],
) -> str:
    """
    Ask the provider for mutator source.

    An empty invariant list renders the prompt without the constraints
    section.

    Returns:
        Mutator module source (the whole reply when it has no code fence)
    """
    prompt = render_mutator_prompt(
        context.problem, context.solution, context.invariants, context.diff, seeds, context.checker_code
    )
    reply = await conversation.ask(prompt)
    return code_block(reply) or reply


async def dry_run(
    mutator_path,
    seeds: Sequence[TestInput],
    duration: float,
    max_size: int,
    validator: Optional[InputValidator] = None,
    timeout: float = DEFAULT_TIMEOUT,
    max_requests: Optional[int] = None,
) -> DryRunReport:
    """
    Exercise a mutator plugin on rotating seeds.

    At least one request is always sent. Distinct outputs are counted; up to
    100 of them are checked by the validator when one is given.

    Args:
        mutator_path: Python mutator module
        seeds: Seed inputs (non-empty)
        duration: Seconds to keep requesting mutations
        max_size: Output cap passed with every request
        validator: Async predicate on inputs
        timeout: Per-request plugin deadline
        max_requests: Optional request cap

    Returns:
        Dry-run report (failures are encoded, never raised)
    """
    if not seeds:
        raise ValueError("dry_run needs at least one seed")

    rng = random.Random(0)
    seen = set()
    samples: List[bytes] = []
    requests = 0
    crashed, failure = False, ""
    plugin = PluginProcess.for_module(mutator_path, timeout=timeout)
    deadline = time.monotonic() + duration

    try:
        await plugin.start()
        while requests == 0 or time.monotonic() < deadline:
            if max_requests is not None and requests >= max_requests:
                break
            seed = seeds[requests % len(seeds)]
            add = seeds[(requests + 1) % len(seeds)]
            request = MutationRequest(
                seed=seed.input_bytes,
                add_seed=add.input_bytes,
                max_size=max_size,
                rng_seed=rng.getrandbits(64),
            )
            mutated = await plugin.mutate(request)
            requests += 1
            digest = hashlib.sha256(mutated).digest()
            if mutated and digest not in seen:
                seen.add(digest)
                if len(samples) < MAX_VALIDITY_SAMPLE:
                    samples.append(mutated)
    except WedgeError as e:
        crashed, failure = True, str(e)
    finally:
        await plugin.close()

    known = {hashlib.sha256(s.input_bytes).digest() for s in seeds}
    produced = len(seen - known)

    checked = valid = 0
    if validator is not None and not crashed:
        for i, data in enumerate(samples):
            checked += 1
            if await validator(TestInput(id=f"dry_{i}", input_bytes=data, origin=Origin.GENERATED)):
                valid += 1

    return DryRunReport(
        duration=duration,
        requests=requests,
        inputs_produced=produced,
        validity_checked=checked,
        validity_valid=valid,
        crashed=crashed,
        failure_message=failure,
    )


async def refine_loop(
    conversation: Conversation,
    context: MutatorContext,
    seeds: Sequence[TestInput],
    work_dir,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    dry_run_seconds: float = 180.0,
    max_size: int = 10 * 1024 * 1024,
    validator: Optional[InputValidator] = None,
    min_validity: float = 0.10,
    plugin_timeout: float = DEFAULT_TIMEOUT,
) -> MutatorArtifact:
    """
    Synthesize, dry-run and repair until a mutator passes.

    Args:
        conversation: Fresh provider conversation
        context: Prompt inputs
        seeds: Seeds for the dry run
        work_dir: Directory receiving candidates and mutator.json
        max_rounds: Synthesis rounds before falling back to the builtin mutator
        dry_run_seconds: Dry-run duration per candidate
        max_size: Output cap
        validator: Optional validity predicate
        min_validity: Sampled validity needed to pass
        plugin_timeout: Per-request plugin deadline

    Returns:
        Passing plugin mutator, or the builtin fallback marked synthesis_exhausted

    Raises:
        ProviderError: Provider failed (ends the loop)
    """
    out = Path(work_dir)
    out.mkdir(parents=True, exist_ok=True)
    solution_id = context.solution.id
    report: Optional[DryRunReport] = None

    for round_no in range(1, max_rounds + 1):
        if round_no == 1:
            source = await synthesize_mutator(conversation, context, seeds)
        else:
            failure = report.failure_reason(min_validity) if report else "unknown failure"
            reply = await conversation.ask(
                render_repair_prompt("mutator", context.problem.id, solution_id,
                                     f"The mutator failed its dry run:\n{failure}")
            )
            source = code_block(reply) or reply

        candidate = out / f"mutator_round_{round_no}.py"
        candidate.write_text(source, encoding="utf-8")
        report = await dry_run(candidate, seeds, dry_run_seconds, max_size, validator, plugin_timeout)

        if report.passed(min_validity):
            final = out / "mutator.py"
            final.write_text(source, encoding="utf-8")
            artifact = MutatorArtifact(
                solution_id=solution_id,
                kind=MutatorKind.PLUGIN_PROCESS,
                entry=str(final),
                rounds_used=round_no,
                dry_run=report,
                constraint_aware=bool(context.invariants),
            )
            logger.info(
                f"🧬 Mutator for {solution_id} passed its dry run in round {round_no} "
                f"({report.inputs_produced} inputs)",
                extra={"solution_id": solution_id, "round": round_no},
            )
            save_artifact(artifact, out)
            return artifact

        logger.info(
            f"Mutator round {round_no} failed: {report.failure_reason(min_validity)[:200]}",
            extra={"solution_id": solution_id, "round": round_no},
        )

    logger.warning(
        f"⚠️ Mutator synthesis exhausted after {max_rounds} rounds for {solution_id}; using builtin",
        extra={"solution_id": solution_id},
    )
    artifact = MutatorArtifact.builtin(solution_id, rounds_used=max_rounds, exhausted=True, dry_run=report)
    save_artifact(artifact, out)
    return artifact


def save_artifact(artifact: MutatorArtifact, directory) -> Path:
    """Write mutator.json."""
    path = Path(directory) / "mutator.json"
    path.write_text(json.dumps(artifact.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def load_artifact(directory) -> MutatorArtifact:
    """Read mutator.json."""
    return MutatorArtifact.model_validate_json((Path(directory) / "mutator.json").read_text())
