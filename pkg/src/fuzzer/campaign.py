"""
Fuzzing campaigns.

One campaign fuzzes one solution: seeds are executed to fill the queue, then
entries are scheduled, mutated and executed until the wall or execution
budget runs out. Every input whose feedback signature was never seen before
is saved and enqueued. With instrumentation feedback on, an input that
reaches a checker is saved even when its signature is known, once per
distinct content, but not enqueued: checker aborts cut coverage short, so
most hits share one signature.
"""

import hashlib
import json
import random
import shutil
import time
from collections import Counter
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Set

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..constraints.instrument import INSTRUMENTED_VARIANT, InstrumentedProgram
from ..corpus.models import Origin, Solution, TestInput
from ..harness.executor import ABORT_ENV, Harness
from ..harness.models import ArtifactKind, BuildArtifact, ExecutionLimits, ExecutionResult, LineProfile
from ..harness.profiles import execute_profiled
from ..mutation.builtin import builtin_mutate
from ..mutation.protocol import DEFAULT_TIMEOUT, MutationRequest, PluginProcess
from ..mutation.synthesis import MutatorArtifact, MutatorKind
from ..pipeline.errors import PluginCrash, WedgeError
from ..pipeline.logger import get_logger
from .schedule import DEFAULT_ENERGY, QueueEntry, schedule
from .signature import FeedbackSignature, feedback_signature

logger = get_logger(__name__)

DEFAULT_MAX_SAVED_INPUTS = 50_000
DEFAULT_MAX_SIZE = 10 * 1024 * 1024


class CampaignBudget(BaseModel):
    """When a campaign stops."""

    model_config = ConfigDict(frozen=True)

    wall_seconds: float = Field(default=3600.0, ge=0)
    max_execs: Optional[int] = Field(default=None, ge=0)

    @property
    def empty(self) -> bool:
        return self.wall_seconds == 0 or self.max_execs == 0


class Campaign(BaseModel):
    """Everything needed to fuzz one solution."""

    solution: Solution
    instrumented: Optional[InstrumentedProgram] = None
    mutator: MutatorArtifact
    seeds: List[TestInput]
    budget: CampaignBudget = Field(default_factory=CampaignBudget)
    rng_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    energy: int = Field(default=DEFAULT_ENERGY, ge=1)
    max_saved_inputs: int = Field(default=DEFAULT_MAX_SAVED_INPUTS, ge=1)
    max_size: int = Field(default=DEFAULT_MAX_SIZE, gt=0)
    collect_coverage: bool = True
    # False: checkers run but their hits are kept out of the feedback
    instrumentation_feedback: bool = True
    plugin_timeout: float = DEFAULT_TIMEOUT

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: List[TestInput]) -> List[TestInput]:
        if not v:
            raise ValueError("a campaign needs at least one seed")
        return v

    @property
    def solution_id(self) -> str:
        return self.solution.id


class CampaignStats(BaseModel):
    """Counters written to stats.json."""

    execs: int = 0
    unique_signatures: int = 0
    checker_hit_fraction: float = 0.0
    exec_checker_hit_fraction: float = 0.0
    wall_seconds: float = 0.0
    rng_seed: int = 0
    outcome_counts: Dict[str, int] = Field(default_factory=dict)
    execution_errors: int = 0
    mutator_fallback: Optional[str] = None


class CampaignResult(BaseModel):
    """Queue, saved outputs and statistics of a finished campaign."""

    solution_id: str
    queue: List[QueueEntry] = Field(default_factory=list)
    all_outputs: List[TestInput] = Field(default_factory=list)
    # Checker hits of every saved output, recorded even when masked from feedback
    output_hits: Dict[str, FrozenSet[str]] = Field(default_factory=dict)
    stats: CampaignStats = Field(default_factory=CampaignStats)

    def hit_outputs(self) -> List[TestInput]:
        """Saved outputs that reached at least one checker."""
        return [t for t in self.all_outputs if self.output_hits.get(t.id)]


class CampaignRunner:
    """
    Runs one campaign.

    Executions inside a campaign are sequential so that a fixed rng_seed
    replays the same queue; parallelism comes from running campaigns side by
    side.
    """

    def __init__(
        self,
        harness: Harness,
        campaign: Campaign,
        out_dir: Optional[Path] = None,
        limits: Optional[ExecutionLimits] = None,
    ):
        """
        Initialize campaign runner.

        Args:
            harness: Harness used to build and execute
            campaign: Campaign definition
            out_dir: Campaign directory (queue/, stats.json, log.txt); nothing is written when None
            limits: Per-execution limits override
        """
        self.harness = harness
        self.campaign = campaign
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.limits = limits

        self.rng = random.Random(campaign.rng_seed)
        self.env = {ABORT_ENV: "1" if campaign.instrumentation_feedback else "0"}
        self.plugin: Optional[PluginProcess] = None
        self.artifact: Optional[BuildArtifact] = None

        self.queue: List[QueueEntry] = []
        self.outputs: List[TestInput] = []
        self.output_hits: Dict[str, FrozenSet[str]] = {}
        self.seen: Set[str] = set()
        self.saved_digests: Set[bytes] = set()
        self.outcomes: Counter = Counter()
        self.execs = 0
        self.exec_hits = 0
        self.errors = 0
        self.fallback: Optional[str] = None
        self.log_lines: List[str] = []
        self.deadline = 0.0

    # ------------------------------------------------------------------
    # Setup
    # ------------------------------------------------------------------

    async def build(self) -> BuildArtifact:
        """
        Build the program under test.

        Raises:
            BuildFailed: Program does not compile
        """
        campaign = self.campaign
        language = campaign.instrumented.language if campaign.instrumented else campaign.solution.language
        toolchain = self.harness.toolchains.get(language)
        profiling = campaign.collect_coverage and toolchain.kind == ArtifactKind.SCRIPT

        if campaign.instrumented is not None:
            return await self.harness.build_source(
                campaign.solution_id,
                language,
                campaign.instrumented.source,
                profiling=profiling,
                variant=INSTRUMENTED_VARIANT,
            )
        return await self.harness.build(campaign.solution, profiling=profiling)

    async def start_mutator(self) -> None:
        """
        Launch the plugin process for a synthesized mutator.

        Raises:
            MutatorUnavailable: Plugin could not be started
        """
        mutator = self.campaign.mutator
        if mutator.kind != MutatorKind.PLUGIN_PROCESS:
            return
        self.plugin = PluginProcess.for_module(mutator.entry, timeout=self.campaign.plugin_timeout)
        await self.plugin.start()

    # ------------------------------------------------------------------
    # Loop
    # ------------------------------------------------------------------

    def exhausted(self) -> bool:
        budget = self.campaign.budget
        if budget.max_execs is not None and self.execs >= budget.max_execs:
            return True
        if len(self.outputs) >= self.campaign.max_saved_inputs:
            return True
        return time.monotonic() >= self.deadline

    async def execute(self, test_input: TestInput):
        """Run one input; returns (result, profile) or None when the harness refused it."""
        self.execs += 1
        try:
            if self.artifact.profiling_enabled:
                return await execute_profiled(
                    self.harness, self.artifact, test_input, self.limits, self.env, strict=False
                )
            return await self.harness.execute(self.artifact, test_input, self.limits, self.env), None
        except WedgeError as e:
            self.errors += 1
            self.log_lines.append(f"{self.execs}\terror\t{type(e).__name__}: {str(e)[:200]}")
            return None

    def signature_of(self, result: ExecutionResult, profile: Optional[LineProfile]) -> FeedbackSignature:
        self.outcomes[result.exit.kind.value] += 1
        if result.checker_hits:
            self.exec_hits += 1
        return feedback_signature(
            result, profile, mask_hits=not self.campaign.instrumentation_feedback
        )

    async def mutate(self, entry: QueueEntry) -> bytes:
        """One mutation of an entry, by the plugin or the builtin mutator."""
        add = self.rng.choice(self.queue).input.input_bytes
        rng_seed = self.rng.getrandbits(64)
        seed = entry.input.input_bytes

        if self.plugin is not None:
            request = MutationRequest(
                seed=seed, add_seed=add, max_size=self.campaign.max_size, rng_seed=rng_seed
            )
            try:
                return await self.plugin.mutate(request)
            except PluginCrash as e:
                self.fallback = str(e).splitlines()[0]
                self.log_lines.append(f"{self.execs}\tmutator_fallback\t{self.fallback}")
                logger.warning(
                    f"⚠️ Mutator plugin for {self.campaign.solution_id} crashed ({self.fallback}); "
                    "continuing with the builtin mutator",
                    extra={"solution_id": self.campaign.solution_id},
                )
                await self.plugin.close(graceful=False)
                self.plugin = None

        return builtin_mutate(seed, rng_seed, self.campaign.max_size, add)

    def save(self, data: bytes, signature: FeedbackSignature, hits: FrozenSet[str],
             parent: Optional[str], enqueue: bool = True) -> TestInput:
        """Record an output; signature-novel outputs also enter the queue."""
        index = len(self.outputs)
        test_input = TestInput(
            id=f"{self.campaign.solution_id}_fuzz_{index:06d}",
            input_bytes=data,
            origin=Origin.GENERATED,
        )
        self.outputs.append(test_input)
        self.output_hits[test_input.id] = hits
        self.saved_digests.add(hashlib.sha256(data).digest())
        if enqueue:
            entry = QueueEntry(
                id=f"q{len(self.queue):06d}",
                input=test_input,
                signature=signature,
                energy=self.campaign.energy,
                discovered_at=self.execs,
                parent=parent,
            )
            self.queue.append(entry)
            self.log_lines.append(f"{self.execs}\tnew\t{entry.id}\t{parent or '-'}\t{signature.key()}")
        else:
            self.log_lines.append(f"{self.execs}\thit\t{test_input.id}\t{parent or '-'}\t{signature.key()}")

        if self.out_dir is not None:
            (self.out_dir / "queue" / f"{index:06d}.in").write_bytes(data)
        if hits:
            logger.debug(
                f"💥 {test_input.id} reached checkers {sorted(hits)}",
                extra={"solution_id": self.campaign.solution_id},
            )
        return test_input

    def keeps_hit(self, data: bytes, result: ExecutionResult) -> bool:
        """Whether an input with a known signature is saved for reaching a checker."""
        if not (self.campaign.instrumentation_feedback and result.checker_hits):
            return False
        return hashlib.sha256(data).digest() not in self.saved_digests

    async def seed_queue(self) -> None:
        """Execute the seeds; each distinct signature enters the queue once."""
        for seed in self.campaign.seeds:
            if self.exhausted():
                return
            ran = await self.execute(seed)
            if ran is None:
                continue
            result, profile = ran
            signature = self.signature_of(result, profile)
            if signature.key() in self.seen:
                continue
            self.seen.add(signature.key())
            self.queue.append(
                QueueEntry(
                    id=f"q{len(self.queue):06d}",
                    input=seed,
                    signature=signature,
                    energy=self.campaign.energy,
                    discovered_at=0,
                )
            )

    async def fuzz(self) -> None:
        while self.queue and not self.exhausted():
            entry, energy = schedule(self.queue, self.rng, self.campaign.energy)
            for _ in range(energy):
                if self.exhausted():
                    return
                data = await self.mutate(entry)
                candidate = TestInput(id=f"exec_{self.execs}", input_bytes=data, origin=Origin.GENERATED)
                ran = await self.execute(candidate)
                if ran is None:
                    continue
                result, profile = ran
                signature = self.signature_of(result, profile)
                if signature.key() not in self.seen:
                    self.seen.add(signature.key())
                    self.save(data, signature, result.checker_hits, entry.id)
                elif self.keeps_hit(data, result):
                    self.save(data, signature, result.checker_hits, entry.id, enqueue=False)

    async def run(self) -> CampaignResult:
        """
        Build, seed and fuzz until the budget is spent.

        Returns:
            Campaign result

        Raises:
            BuildFailed: Program under test does not build
            MutatorUnavailable: Mutator plugin could not be started
        """
        campaign = self.campaign
        started = time.monotonic()
        self.deadline = started + campaign.budget.wall_seconds

        if self.out_dir is not None:
            queue_dir = self.out_dir / "queue"
            shutil.rmtree(queue_dir, ignore_errors=True)
            queue_dir.mkdir(parents=True)

        logger.info(
            f"🎯 Fuzzing {campaign.solution_id} with the {campaign.mutator.kind.value} mutator "
            f"(rng_seed={campaign.rng_seed}, instrumentation feedback "
            f"{'on' if campaign.instrumentation_feedback else 'off'})",
            extra={"solution_id": campaign.solution_id, "stage": "fuzz"},
        )

        if not campaign.budget.empty:
            self.artifact = await self.build()
            await self.start_mutator()
            try:
                await self.seed_queue()
                await self.fuzz()
            finally:
                if self.plugin is not None:
                    await self.plugin.close()

        if not self.queue and not campaign.budget.empty:
            logger.warning(
                f"⚠️ No seed of {campaign.solution_id} could be executed; campaign produced nothing",
                extra={"solution_id": campaign.solution_id},
            )

        hit_outputs = sum(1 for hits in self.output_hits.values() if hits)
        stats = CampaignStats(
            execs=self.execs,
            unique_signatures=len(self.seen),
            checker_hit_fraction=hit_outputs / len(self.outputs) if self.outputs else 0.0,
            exec_checker_hit_fraction=self.exec_hits / self.execs if self.execs else 0.0,
            wall_seconds=round(time.monotonic() - started, 3),
            rng_seed=campaign.rng_seed,
            outcome_counts=dict(sorted(self.outcomes.items())),
            execution_errors=self.errors,
            mutator_fallback=self.fallback,
        )
        result = CampaignResult(
            solution_id=campaign.solution_id,
            queue=self.queue,
            all_outputs=self.outputs,
            output_hits=self.output_hits,
            stats=stats,
        )

        if self.out_dir is not None:
            write_campaign(self.out_dir, result, self.log_lines)

        logger.info(
            f"✅ Campaign {campaign.solution_id}: {stats.execs} execs, {len(self.outputs)} saved, "
            f"checker hit fraction {stats.checker_hit_fraction:.2%}",
            extra={"solution_id": campaign.solution_id, "stage": "fuzz"},
        )
        return result


async def run_campaign(
    harness: Harness,
    campaign: Campaign,
    out_dir: Optional[Path] = None,
    limits: Optional[ExecutionLimits] = None,
) -> CampaignResult:
    """
    Run one fuzzing campaign.

    Checker aborts are enabled (WEDGE_ABORT=1) unless the campaign turns
    instrumentation feedback off, in which case the checkers only report.

    Args:
        harness: Harness used to build and execute
        campaign: Campaign definition
        out_dir: Campaign directory to write
        limits: Per-execution limits override

    Returns:
        Campaign result
    """
    return await CampaignRunner(harness, campaign, out_dir, limits).run()


def write_campaign(out_dir: Path, result: CampaignResult, log_lines: Sequence[str]) -> None:
    """Write stats.json and log.txt (queue files are written as they are found)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stats = result.stats.model_dump(mode="json")
    stats["saved_inputs"] = len(result.all_outputs)
    stats["hit_outputs"] = [t.id for t in result.hit_outputs()]
    (out_dir / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / "log.txt").write_text("".join(f"{line}\n" for line in log_lines), encoding="utf-8")


def load_campaign_outputs(campaign_dir: Path) -> List[TestInput]:
    """Saved inputs of a finished campaign, in discovery order."""
    queue_dir = Path(campaign_dir) / "queue"
    solution_id = Path(campaign_dir).name
    return [
        TestInput(
            id=f"{solution_id}_fuzz_{path.stem}",
            input_bytes=path.read_bytes(),
            origin=Origin.GENERATED,
        )
        for path in sorted(queue_dir.glob("*.in"))
    ]


def load_campaign_stats(campaign_dir: Path) -> CampaignStats:
    """Read stats.json of a finished campaign."""
    data = json.loads((Path(campaign_dir) / "stats.json").read_text())
    return CampaignStats.model_validate({k: v for k, v in data.items() if k in CampaignStats.model_fields})
