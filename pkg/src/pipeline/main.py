"""
Command-line entrypoint for the WEDGE pipeline.

Each subcommand runs one stage against a run directory:

    ingest <corpus>       load, measure and filter the corpus (creates the run)
    profile <run>         line profiles of the solutions selected for mining
    mine-pairs <run>      contrastive pairs and profile diffs
    constraints <run>     invariants, checkers and instrumented programs
    mutators <run>        constraint-aware mutator synthesis
    fuzz <run>            fuzzing campaigns
    filter <run>          validator synthesis, validity and consistency filtering
    assemble <run>        ranked benchmark
    evaluate <run>        comparison reports
    direct-baseline <run> direct-prompt test generator baseline
    export-aflpp <run> <out>  AFL++ bundles

Stages record their outputs in the run manifest; a completed stage is not
re-run unless --force is given.
"""

import argparse
import asyncio
import json
import sys
import time
from collections import defaultdict
from datetime import datetime
from pathlib import Path
from typing import Awaitable, Callable, Dict, Iterable, List, Optional, Tuple

from ..constraints.instrument import INSTRUMENTED_VARIANT
from ..constraints.providers import Conversation, GenerationParams, LLMProvider, create_provider
from ..constraints.reasoner import derive_constraints, load_constraint_result
from ..corpus.filtering import detect_multi_output, filter_problems
from ..corpus.loader import load_corpus
from ..corpus.models import Corpus, FilterCriteria, Origin, Problem, Solution, TestInput
from ..filtercheck.benchmark import assemble_benchmark, load_benchmark
from ..filtercheck.consistency import filter_candidates
from ..filtercheck.direct_prompt import generate_direct_tests
from ..filtercheck.validator import input_validator_for, load_validator, synthesize_validator
from ..fuzzer.campaign import Campaign, CampaignBudget, load_campaign_outputs, run_campaign
from ..fuzzer.export import export_aflpp
from ..harness.executor import Harness
from ..harness.meters import CostMeter, create_meter, measure_cost
from ..harness.models import BuildArtifact, ExecutionLimits, LineProfile, SolutionCosts
from ..harness.profiles import collect_line_profile
from ..harness.toolchains import ToolchainRegistry
from ..mutation.synthesis import MutatorArtifact, MutatorContext, load_artifact, refine_loop
from ..pairminer.miner import ContrastivePair, ProfileDiff, build_profile_diff, mine_pair, select_solutions_for_mining
from ..stats.reports import build_comparison_report, discrimination_report, size_slice, summary_table, write_reports
from ..utils.durations import format_duration, parse_budget
from ..utils.metrics import metrics
from .config import Config
from .errors import BuildFailed, ConfigError, NoQualifyingPair, WedgeError
from .logger import get_logger, set_level
from .manifest import ManifestStore

logger = get_logger(__name__)

CONFIG_FILE_NAME = "wedge.toml"
WEDGE_TECHNIQUE = "wedge"
DEFAULT_TECHNIQUE = "default"


def _write_json(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class Pipeline:
    """Stage orchestrator for one run directory."""

    def __init__(self, store: ManifestStore, config: Config):
        """
        Initialize pipeline.

        Args:
            store: Manifest store of the run
            config: Effective configuration
        """
        self.store = store
        self.config = config
        self.run_dir = store.run_dir
        self.semaphore = asyncio.Semaphore(config.run.jobs)

        self._harness: Optional[Harness] = None
        self._meter: Optional[CostMeter] = None
        self._corpus: Optional[Corpus] = None
        self._providers: List[LLMProvider] = []

    # ------------------------------------------------------------------
    # Shared resources
    # ------------------------------------------------------------------

    @property
    def manifest(self):
        return self.store.manifest

    @property
    def harness(self) -> Harness:
        if self._harness is None:
            cfg = self.config.harness
            self._harness = Harness(
                ToolchainRegistry.from_file(cfg.toolchains),
                self.run_dir / "work",
                ExecutionLimits(
                    wall_timeout=cfg.wall_timeout,
                    memory_cap=cfg.memory_cap,
                    max_input_bytes=cfg.max_input_bytes,
                ),
                jobs=self.config.run.jobs,
                build_timeout=cfg.build_timeout,
            )
        return self._harness

    @property
    def meter(self) -> CostMeter:
        if self._meter is None:
            self._meter = create_meter(self.config.harness.meter, self.config.harness.perf_event)
        return self._meter

    @property
    def corpus(self) -> Corpus:
        if self._corpus is None:
            self._corpus = load_corpus(self.manifest.corpus_root)
        return self._corpus

    def provider(self) -> LLMProvider:
        spec = self.config.provider.spec
        if not spec:
            raise ConfigError("this stage needs a provider (--provider offline:<dir>, subprocess:<cmd> or http:<url>)")
        provider = create_provider(spec, self.config.provider)
        self._providers.append(provider)
        return provider

    def conversation(self, provider: LLMProvider) -> Conversation:
        return Conversation(
            provider,
            GenerationParams(
                temperature=self.config.provider.temperature,
                max_tokens=self.config.provider.max_tokens,
            ),
        )

    async def close(self) -> None:
        for provider in self._providers:
            await provider.close()
        self._providers.clear()

    def path(self, *parts: str) -> Path:
        return self.run_dir.joinpath(*parts)

    def solution(self, solution_id: str) -> Tuple[Problem, Solution]:
        problem = self.corpus.problem_of(solution_id)
        return problem, problem.get_solution(solution_id)

    def costs_of(self, solution_id: str) -> SolutionCosts:
        return SolutionCosts.model_validate_json(self.path("profiles", solution_id, "costs.json").read_text())

    def survivors(self) -> List[str]:
        data = json.loads(self.path("corpus", "survivors.json").read_text())
        return [entry["problem_id"] for entry in data]

    def fuzzed_by_problem(self) -> Dict[str, List[str]]:
        grouped: Dict[str, List[str]] = defaultdict(list)
        for solution_id in self.manifest.ids_with_status("fuzz"):
            grouped[self.corpus.problem_of(solution_id).id].append(solution_id)
        return dict(sorted(grouped.items()))

    async def build_all(self, solutions: Iterable[Solution]) -> Dict[str, BuildArtifact]:
        """Build solutions, skipping (and logging) those that fail."""
        builds: Dict[str, BuildArtifact] = {}
        for solution in solutions:
            try:
                builds[solution.id] = await self.harness.build(solution)
            except BuildFailed:
                logger.warning(f"⚠️ {solution.id} does not build; left out", extra={"solution_id": solution.id})
        return builds

    async def for_each(self, stage: str, keys: Iterable[str],
                       worker: Callable[[str], Awaitable[Optional[dict]]]) -> List[str]:
        """
        Run a worker per key on the pool and record each outcome.

        A worker returns a detail dict (recorded as "ok") or None when it
        recorded its own status. Failures are recorded and do not stop the
        other workers; if every worker fails, the first error is raised.

        Returns:
            Keys whose worker succeeded
        """
        keys = list(keys)
        errors: List[WedgeError] = []
        succeeded: List[str] = []

        async def run(key: str) -> None:
            async with self.semaphore:
                try:
                    detail = await worker(key)
                except WedgeError as e:
                    logger.error(f"❌ {stage} failed for {key}: {e}", extra={"stage": stage})
                    await self.store.record(key, stage, "failed", e.to_dict())
                    errors.append(e)
                    return
                except Exception as e:
                    logger.error(f"❌ {stage} crashed for {key}: {e}", exc_info=True, extra={"stage": stage})
                    await self.store.record(key, stage, "failed", {"error": type(e).__name__, "message": str(e)})
                    raise
                if detail is not None:
                    await self.store.record(key, stage, "ok", **detail)
                succeeded.append(key)

        await asyncio.gather(*(run(k) for k in keys))
        if errors and not succeeded:
            raise errors[0]
        return sorted(succeeded)

    # ------------------------------------------------------------------
    # Stages
    # ------------------------------------------------------------------

    async def ingest(self) -> None:
        """Measure default-test costs and filter the corpus."""
        corpus = self.corpus
        cfg = self.config.corpus
        criteria = FilterCriteria(
            min_instructions=cfg.min_instructions,
            min_solutions=cfg.min_solutions,
            min_tests=cfg.min_tests,
            require_single_output=cfg.require_single_output,
            top_n_by_cv=cfg.top_n_by_cv,
        )
        runs = self.config.harness.cost_runs
        profiles: Dict[str, List[SolutionCosts]] = defaultdict(list)
        outputs: Dict[str, Dict[Tuple[str, str], bytes]] = defaultdict(dict)
        written: List[Path] = []

        eligible = {
            pid: p for pid, p in corpus.problems.items()
            if len(p.correct_solutions) >= criteria.min_solutions and len(p.default_tests) >= criteria.min_tests
        }
        solutions = {s.id: (p, s) for p in eligible.values() for s in p.correct_solutions}

        async def measure(solution_id: str) -> dict:
            problem, solution = solutions[solution_id]
            artifact = await self.harness.build(solution)
            per_test = {
                test.id: await measure_cost(self.harness, self.meter, artifact, test, runs)
                for test in problem.default_tests
            }
            for test in problem.official_tests:
                result = await self.harness.execute(artifact, test)
                outputs[problem.id][(solution.id, test.id)] = result.stdout
            costs = SolutionCosts(solution_id=solution.id, per_test=per_test)
            profiles[problem.id].append(costs)
            written.append(_write_json(self.path("profiles", solution.id, "costs.json"), costs.model_dump(mode="json")))
            return {"problem_id": problem.id, "mean_cost": costs.mean_cost}

        await self.for_each("ingest", sorted(solutions), measure)

        measured = Corpus(
            root_path=corpus.root_path,
            problems={pid: p for pid, p in corpus.problems.items() if pid not in eligible or profiles.get(pid)},
        )
        multi_output = {
            pid: detect_multi_output(eligible[pid], outputs[pid], cfg.agreement_fraction)
            for pid in profiles
        }
        ranked = filter_problems(measured, profiles, criteria, multi_output)
        written.append(_write_json(
            self.path("corpus", "survivors.json"),
            [{"problem_id": pid, "cv": cv} for pid, cv in ranked],
        ))
        await self.store.complete("ingest", written, survivors=len(ranked))

    async def profile(self) -> None:
        """Collect line profiles for the solutions chosen for pair mining."""
        self.manifest.require("profile", "ingest")
        written: List[Path] = []
        chosen: List[str] = []
        for problem_id in self.survivors():
            problem = self.corpus.problems[problem_id]
            tables = {}
            for solution in problem.correct_solutions:
                if self.path("profiles", solution.id, "costs.json").is_file():
                    tables[solution.id] = self.costs_of(solution.id).per_test
            chosen.extend(select_solutions_for_mining(tables, self.config.fuzz.max_solutions_per_problem))

        async def collect(solution_id: str) -> dict:
            problem, solution = self.solution(solution_id)
            artifact = await self.harness.build(solution, profiling=True)
            for test in problem.default_tests:
                line_profile = await collect_line_profile(self.harness, artifact, test)
                written.append(_write_json(
                    self.path("profiles", solution_id, "lines", f"{test.id}.json"),
                    line_profile.model_dump(mode="json"),
                ))
            return {"problem_id": problem.id}

        await self.for_each("profile", chosen, collect)
        await self.store.complete("profile", written, solutions=len(chosen))

    def line_profile(self, solution_id: str, test_id: str) -> LineProfile:
        return LineProfile.model_validate_json(
            self.path("profiles", solution_id, "lines", f"{test_id}.json").read_text()
        )

    def pair_of(self, solution_id: str) -> Tuple[ContrastivePair, ProfileDiff]:
        out = self.path("pairs", solution_id)
        return (
            ContrastivePair.model_validate_json((out / "pair.json").read_text()),
            ProfileDiff.model_validate_json((out / "diff.json").read_text()),
        )

    async def mine_pairs(self) -> None:
        """Mine the contrastive pair and profile diff of every profiled solution."""
        self.manifest.require("mine-pairs", "profile")
        written: List[Path] = []

        async def mine(solution_id: str) -> Optional[dict]:
            problem, solution = self.solution(solution_id)
            try:
                pair = mine_pair(problem.default_tests, self.costs_of(solution_id).per_test,
                                 self.config.pairs.min_cost_ratio)
            except NoQualifyingPair as e:
                logger.info(f"No contrastive pair for {solution_id}: {e}", extra={"solution_id": solution_id})
                await self.store.record(solution_id, "mine-pairs", "no_pair", e.to_dict())
                return None

            diff = build_profile_diff(
                solution.source,
                self.line_profile(solution_id, pair.slow),
                self.line_profile(solution_id, pair.fast),
                problem.get_test(pair.slow),
                problem.get_test(pair.fast),
                self.config.pairs.preview_bytes,
            )
            out = self.path("pairs", solution_id)
            written.append(_write_json(out / "pair.json", pair.model_dump(mode="json")))
            written.append(_write_json(out / "diff.json", diff.model_dump(mode="json")))
            (out / "diff.txt").write_text(diff.render() + "\n", encoding="utf-8")
            written.append(out / "diff.txt")
            return {"slow": pair.slow, "fast": pair.fast, "cost_ratio": pair.cost_ratio}

        await self.for_each("mine-pairs", self.manifest.ids_with_status("profile"), mine)
        await self.store.complete("mine-pairs", written)

    async def constraints(self) -> None:
        """Derive invariants and instrumented programs."""
        self.manifest.require("constraints", "mine-pairs")
        provider = self.provider()
        written: List[Path] = []

        async def derive(solution_id: str) -> dict:
            problem, solution = self.solution(solution_id)
            pair, diff = self.pair_of(solution_id)
            out = self.path("constraints", solution_id)
            result = await derive_constraints(
                self.conversation(provider), self.harness, problem, solution, pair, diff, out
            )
            written.extend(p for p in out.iterdir() if p.is_file())
            return {
                "invariants": len(result.invariants),
                "checkers": len(result.checkers),
                "pair_discriminating": bool(result.validation and result.validation.pair_discriminating),
            }

        await self.for_each("constraints", self.manifest.ids_with_status("mine-pairs"), derive)
        await self.store.complete("constraints", written)

    async def mutators(self, no_constraints: bool = False) -> None:
        """Synthesize a mutator per solution."""
        if no_constraints:
            self.manifest.require("mutators", "profile")
            solution_ids = self.manifest.ids_with_status("profile")
        else:
            self.manifest.require("mutators", "constraints")
            solution_ids = self.manifest.ids_with_status("constraints")
        provider = self.provider()
        cfg = self.config.mutation
        written: List[Path] = []

        async def synthesize(solution_id: str) -> dict:
            problem, solution = self.solution(solution_id)
            diff = None
            if self.path("pairs", solution_id, "diff.json").is_file():
                diff = self.pair_of(solution_id)[1]
            invariants, checker_code = [], []
            if not no_constraints:
                result = load_constraint_result(self.path("constraints", solution_id), solution_id)
                invariants = result.invariants
                checker_code = [c.code for c in result.checkers]
            context = MutatorContext(
                problem=problem, solution=solution, invariants=invariants, diff=diff, checker_code=checker_code
            )

            out = self.path("mutators", solution_id)
            validator = None
            validator_dir = self.path("filter", problem.id)
            if (validator_dir / "validator.json").is_file():
                validator = input_validator_for(self.harness, load_validator(validator_dir))
            artifact = await refine_loop(
                self.conversation(provider),
                context,
                problem.default_tests,
                out,
                max_rounds=cfg.max_rounds,
                dry_run_seconds=cfg.dry_run_seconds,
                max_size=self.config.harness.max_input_bytes,
                min_validity=cfg.min_validity,
                plugin_timeout=cfg.plugin_timeout,
                validator=validator,
            )
            written.extend(p for p in out.iterdir() if p.is_file())
            return {
                "kind": artifact.kind.value,
                "rounds_used": artifact.rounds_used,
                "synthesis_exhausted": artifact.synthesis_exhausted,
                "constraint_aware": artifact.constraint_aware,
            }

        await self.for_each("mutators", solution_ids, synthesize)
        await self.store.complete("mutators", written, no_constraints=no_constraints)

    def mutator_of(self, solution_id: str) -> MutatorArtifact:
        directory = self.path("mutators", solution_id)
        if (directory / "mutator.json").is_file():
            return load_artifact(directory)
        return MutatorArtifact.builtin(solution_id)

    async def fuzz(self, budget: CampaignBudget, rng_seed: int, no_instr: bool = False,
                   default_mutator: bool = False) -> None:
        """Run one campaign per solution."""
        needed = ["profile"]
        if not no_instr:
            needed.append("constraints")
        if not default_mutator:
            needed.append("mutators")
        self.manifest.require("fuzz", *needed)

        if no_instr:
            solution_ids = self.manifest.ids_with_status("profile")
        else:
            solution_ids = self.manifest.ids_with_status("constraints")
        cfg = self.config.fuzz
        written: List[Path] = []

        async def fuzz_one(solution_id: str) -> Optional[dict]:
            problem, solution = self.solution(solution_id)
            constraint_dir = self.path("constraints", solution_id)
            instrumented = (
                load_constraint_result(constraint_dir, solution_id).instrumented
                if constraint_dir.is_dir() else None
            )
            if instrumented is None and not no_instr:
                await self.store.record(solution_id, "fuzz", "skipped", detail="no instrumented program")
                return None

            campaign = Campaign(
                solution=solution,
                instrumented=instrumented,
                mutator=MutatorArtifact.builtin(solution_id) if default_mutator else self.mutator_of(solution_id),
                seeds=problem.default_tests,
                budget=budget,
                rng_seed=rng_seed,
                energy=cfg.energy,
                max_saved_inputs=cfg.max_saved_inputs,
                max_size=self.config.harness.max_input_bytes,
                collect_coverage=cfg.collect_coverage,
                instrumentation_feedback=not no_instr,
                plugin_timeout=self.config.mutation.plugin_timeout,
            )
            out = self.path("campaigns", solution_id)
            result = await run_campaign(self.harness, campaign, out)
            written.extend([out / "stats.json", out / "log.txt"])
            written.extend(sorted((out / "queue").glob("*.in")))
            return {
                "problem_id": problem.id,
                "saved": len(result.all_outputs),
                "checker_hit_fraction": result.stats.checker_hit_fraction,
            }

        await self.for_each("fuzz", solution_ids, fuzz_one)
        await self.store.complete(
            "fuzz", written,
            wall_seconds=budget.wall_seconds, max_execs=budget.max_execs, rng_seed=rng_seed,
            no_instr=no_instr, default_mutator=default_mutator,
        )

    async def filter(self) -> None:
        """Synthesize validators and keep valid, consistent campaign outputs."""
        self.manifest.require("filter", "fuzz")
        provider = self.provider()
        cfg = self.config.filter
        grouped = self.fuzzed_by_problem()
        written: List[Path] = []

        async def filter_problem(problem_id: str) -> dict:
            problem = self.corpus.problems[problem_id]
            out = self.path("filter", problem_id)
            validator = await synthesize_validator(
                self.conversation(provider), self.harness, problem, out,
                max_rounds=cfg.validator_rounds, timeout=cfg.validator_timeout,
            )
            candidates: List[TestInput] = []
            for solution_id in grouped[problem_id]:
                candidates.extend(load_campaign_outputs(self.path("campaigns", solution_id)))

            builds = await self.build_all(problem.correct_solutions)
            outcome = await filter_candidates(
                self.harness, validator, list(builds.values()), candidates, cfg.consistency_threshold
            )
            kept_dir = out / "kept"
            kept_dir.mkdir(parents=True, exist_ok=True)
            for stale in kept_dir.glob("*.in"):
                stale.unlink()
            for test in outcome.kept:
                (kept_dir / f"{test.id}.in").write_bytes(test.input_bytes)
                written.append(kept_dir / f"{test.id}.in")
            written.append(_write_json(out / "report.json", outcome.model_dump(mode="json", exclude={"kept"})))
            written.extend([out / "validator.py", out / "validator.json"])
            return {
                "candidates": len(candidates),
                "kept": len(outcome.kept),
                "validator_rounds": validator.rounds_used,
            }

        await self.for_each("filter", grouped, filter_problem)
        await self.store.complete("filter", written)

    def kept_inputs(self, problem_id: str) -> List[TestInput]:
        kept_dir = self.path("filter", problem_id, "kept")
        return [
            TestInput(id=p.stem, input_bytes=p.read_bytes(), origin=Origin.GENERATED)
            for p in sorted(kept_dir.glob("*.in"))
        ]

    async def assemble(self, k: int) -> None:
        """Rank kept inputs per fuzzed solution into the benchmark."""
        self.manifest.require("assemble", "filter")
        grouped = self.fuzzed_by_problem()
        bench = self.path("bench")
        written: List[Path] = []

        async def assemble_problem(problem_id: str) -> dict:
            problem = self.corpus.problems[problem_id]
            builds = await self.build_all(problem.get_solution(sid) for sid in grouped[problem_id])
            entries = await assemble_benchmark(
                self.harness, self.meter, problem, builds, self.kept_inputs(problem_id), k=k,
                bench_dir=bench,
                default_costs={sid: self.costs_of(sid) for sid in builds},
                runs=self.config.harness.cost_runs,
            )
            written.extend(p for p in (bench / "problems" / problem_id).rglob("*") if p.is_file())
            return {"solutions": len(entries), "entries": sum(len(e) for e in entries.values())}

        await self.for_each("assemble", self.manifest.ids_with_status("filter"), assemble_problem)
        await self.store.complete("assemble", written, k=k)

    async def evaluate(self, against: List[str]) -> str:
        """Compare the benchmark with default tests and other benchmark directories."""
        self.manifest.require("evaluate", "assemble")
        wedge = load_benchmark(self.path("bench"))
        per_program: Dict[str, Dict[str, float]] = {}
        baseline: Dict[str, float] = {}
        input_sizes: Dict[str, int] = {}

        for solution_id, bench in wedge.items():
            if not bench.mean_costs:
                continue
            default_mean = self.costs_of(solution_id).mean_cost
            per_program[solution_id] = {DEFAULT_TECHNIQUE: default_mean, WEDGE_TECHNIQUE: bench.mean_cost}
            if default_mean > 0:
                baseline[solution_id] = default_mean
            input_sizes[solution_id] = max(len(t.input_bytes) for t in bench.inputs)

        others = []
        for directory in against:
            name = Path(directory).resolve().name
            others.append(name)
            for solution_id, bench in load_benchmark(directory).items():
                if solution_id in per_program and bench.mean_costs:
                    per_program[solution_id][name] = bench.mean_cost

        sides = [WEDGE_TECHNIQUE, others[0] if others else DEFAULT_TECHNIQUE]
        report = build_comparison_report(per_program, baseline, histogram_sides=sides)
        slices = size_slice(per_program, input_sizes, baseline, histogram_sides=sides)

        hit_costs: List[float] = []
        miss_costs: List[float] = []
        for solution_id, bench in sorted(wedge.items()):
            instrumented = None
            if self.path("constraints", solution_id).is_dir():
                instrumented = load_constraint_result(self.path("constraints", solution_id), solution_id).instrumented
            if instrumented is None:
                continue
            artifact = await self.harness.build_source(
                solution_id, instrumented.language, instrumented.source, variant=INSTRUMENTED_VARIANT
            )
            for test_input, cost in zip(bench.inputs, bench.mean_costs):
                result = await self.harness.execute(artifact, test_input)
                (hit_costs if result.checker_hits else miss_costs).append(cost)
        discrimination = (
            {"all": discrimination_report(hit_costs, miss_costs)} if hit_costs or miss_costs else None
        )

        written = write_reports(self.path("reports"), report, slices, discrimination)
        await self.store.complete("evaluate", written, against=[str(Path(d).resolve()) for d in against])
        return summary_table(report)

    async def direct_baseline(self, number_of_tests: int, k: int) -> Path:
        """Build the direct-prompt baseline benchmark."""
        self.manifest.require("direct-baseline", "profile")
        provider = self.provider()
        bench = self.path("baselines", "direct")
        grouped: Dict[str, List[str]] = defaultdict(list)
        for solution_id in self.manifest.ids_with_status("profile"):
            grouped[self.corpus.problem_of(solution_id).id].append(solution_id)
        written: List[Path] = []

        async def baseline_problem(problem_id: str) -> dict:
            problem = self.corpus.problems[problem_id]
            tests = await generate_direct_tests(
                self.conversation(provider), self.harness, problem,
                self.path("baselines", "direct-work", problem_id), number_of_tests,
            )
            builds = await self.build_all(problem.get_solution(sid) for sid in grouped[problem_id])
            await assemble_benchmark(
                self.harness, self.meter, problem, builds, tests, k=k, bench_dir=bench,
                default_costs={sid: self.costs_of(sid) for sid in builds},
                runs=self.config.harness.cost_runs,
            )
            written.extend(p for p in (bench / "problems" / problem_id).rglob("*") if p.is_file())
            return {"tests": len(tests)}

        await self.for_each("direct-baseline", sorted(grouped), baseline_problem)
        await self.store.complete("direct-baseline", written, number_of_tests=number_of_tests, k=k)
        return bench

    async def export_aflpp(self, out_dir: str) -> None:
        """Write an AFL++ bundle per instrumented solution."""
        self.manifest.require("export-aflpp", "constraints")
        out = Path(out_dir)
        written: List[Path] = []
        timeout_ms = int(self.config.harness.wall_timeout * 1000)

        async def export(solution_id: str) -> Optional[dict]:
            problem, _ = self.solution(solution_id)
            result = load_constraint_result(self.path("constraints", solution_id), solution_id)
            if result.instrumented is None:
                await self.store.record(solution_id, "export-aflpp", "skipped")
                return None
            manifest = export_aflpp(
                result.instrumented, self.mutator_of(solution_id), out / solution_id,
                seeds=problem.default_tests, timeout_ms=timeout_ms,
            )
            written.extend(out / solution_id / name for name in manifest.files)
            return {"files": len(manifest.files)}

        await self.for_each("export-aflpp", self.manifest.ids_with_status("constraints"), export)
        await self.store.complete("export-aflpp", written, out_dir=str(out.resolve()))


# ============================================================================
# Command line
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file (overrides flags)")
    common.add_argument("--jobs", type=int, help="Worker pool size (default: WEDGE_JOBS or CPU count)")
    common.add_argument("--meter", choices=["trace_counter", "hardware_counter"], help="Cost meter")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Log level")
    common.add_argument("--force", action="store_true", help="Re-run a stage that already completed")

    parser = argparse.ArgumentParser(
        prog="wedge",
        description="Generate performance-stressing tests with constraint-guided fuzzing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", parents=[common], help="Load, measure and filter a corpus")
    ingest.add_argument("corpus", help="Corpus root directory")
    ingest.add_argument("--run-dir", help="Run directory to create (default: runs/<timestamp>)")

    for name, help_text in (
        ("profile", "Collect line profiles"),
        ("mine-pairs", "Mine contrastive pairs"),
        ("constraints", "Derive performance constraints and checkers"),
        ("mutators", "Synthesize constraint-aware mutators"),
        ("fuzz", "Run fuzzing campaigns"),
        ("filter", "Validate and consistency-filter campaign outputs"),
        ("assemble", "Assemble the ranked benchmark"),
        ("evaluate", "Write comparison reports"),
        ("direct-baseline", "Build the direct-prompt baseline benchmark"),
        ("export-aflpp", "Export AFL++ bundles"),
    ):
        stage = sub.add_parser(name, parents=[common], help=help_text)
        stage.add_argument("run", help="Run directory")
        if name in ("constraints", "mutators", "filter", "direct-baseline"):
            stage.add_argument("--provider", help="offline:<dir>, subprocess:<cmd> or http:<url>")
        if name == "mutators":
            stage.add_argument("--no-constraints", action="store_true",
                               help="Prompt without the constraint summary")
        if name == "fuzz":
            stage.add_argument("--budget", default=None, help="Duration (90s, 1h) or executions (2000execs)")
            stage.add_argument("--seed", type=int, default=0, help="Campaign rng seed (u64)")
            stage.add_argument("--no-instr", action="store_true",
                               help="Keep checker hits out of the fuzzing feedback")
            stage.add_argument("--default-mutator", action="store_true",
                               help="Use the builtin mutator instead of synthesized ones")
        if name in ("assemble", "direct-baseline"):
            stage.add_argument("-k", type=int, default=None, help="Tests kept per solution")
        if name == "direct-baseline":
            stage.add_argument("--tests", type=int, default=10, help="Tests requested from the generator")
        if name == "evaluate":
            stage.add_argument("--against", nargs="*", default=[], help="Other benchmark directories")
        if name == "export-aflpp":
            stage.add_argument("out", help="Bundle output directory")

    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, object]]:
    return {
        "run": {"jobs": args.jobs},
        "harness": {"meter": args.meter},
        "log": {"level": args.log_level},
        "provider": {"spec": getattr(args, "provider", None)},
        "filter": {"top_k": getattr(args, "k", None)},
    }


def _fuzz_budget(args: argparse.Namespace, config: Config) -> CampaignBudget:
    if args.budget is None:
        return CampaignBudget(wall_seconds=config.fuzz.wall_seconds, max_execs=config.fuzz.max_execs)
    try:
        wall, execs = parse_budget(args.budget)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if execs is not None:
        # Execution budgets still stop at the configured wall budget
        return CampaignBudget(wall_seconds=config.fuzz.wall_seconds, max_execs=execs)
    return CampaignBudget(wall_seconds=wall)


def _open_run(args: argparse.Namespace) -> Tuple[ManifestStore, Config]:
    if args.command == "ingest":
        corpus_root = Path(args.corpus).resolve()
        config_file = args.config
        if config_file is None and (corpus_root / CONFIG_FILE_NAME).is_file():
            config_file = str(corpus_root / CONFIG_FILE_NAME)
        config = Config.load(config_file, _overrides(args))
        run_dir = Path(args.run_dir or Path("runs") / datetime.now().strftime("run-%Y%m%d-%H%M%S"))
        store = ManifestStore.create(run_dir, str(corpus_root), config.snapshot())
        return store, config

    store = ManifestStore(args.run)
    manifest = store.load()
    config = Config.load(args.config, _overrides(args), snapshot=manifest.config)
    return store, config


async def run_command(args: argparse.Namespace) -> int:
    """Execute one parsed command."""
    store, config = _open_run(args)
    set_level(config.log.level)
    stage = args.command

    if store.manifest.is_complete(stage) and stage != "ingest":
        if not args.force:
            logger.info(f"Stage {stage} already completed for {store.run_dir}; use --force to re-run")
            return 0
        await store.reset(stage)

    pipeline = Pipeline(store, config)
    logger.info(f"🚀 {stage} on {store.run_dir} (run {store.manifest.run_id})", extra={"stage": stage})
    started = time.monotonic()
    try:
        if stage == "ingest":
            await pipeline.ingest()
            print(store.run_dir)
        elif stage == "profile":
            await pipeline.profile()
        elif stage == "mine-pairs":
            await pipeline.mine_pairs()
        elif stage == "constraints":
            await pipeline.constraints()
        elif stage == "mutators":
            await pipeline.mutators(no_constraints=args.no_constraints)
        elif stage == "fuzz":
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            await pipeline.fuzz(_fuzz_budget(args, config), args.seed, args.no_instr, args.default_mutator)
        elif stage == "filter":
            await pipeline.filter()
        elif stage == "assemble":
            await pipeline.assemble(config.filter.top_k)
        elif stage == "evaluate":
            print(await pipeline.evaluate(args.against))
        elif stage == "direct-baseline":
            print(await pipeline.direct_baseline(args.tests, config.filter.top_k))
        elif stage == "export-aflpp":
            await pipeline.export_aflpp(args.out)
        elapsed = time.monotonic() - started
        logger.info(f"⏱️ {stage} finished in {format_duration(elapsed)}",
                    extra={"stage": stage, "duration_ms": elapsed * 1000})
    finally:
        await pipeline.close()
        logger.debug(f"Metrics: {metrics.get_summary()}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line.

    Returns:
        Process exit code (0 ok, 2 usage, 3 precondition, 4 provider, 5 build/exec)
    """
    args = build_parser().parse_args(argv)
    try:
        return asyncio.run(run_command(args))
    except WedgeError as e:
        logger.error(f"❌ {e}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
