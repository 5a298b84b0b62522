"""
Benchmark assembly.

Ranks the filtered candidates by measured cost for every solution and writes
the top k per solution in the benchmark layout:

    <bench>/problems/<pid>/solutions/<sid>/tests/rank_<r>.in
    <bench>/problems/<pid>/solutions/<sid>/meta.json
"""

import hashlib
import json
import shutil
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..corpus.models import Origin, Problem, TestInput
from ..harness.executor import Harness
from ..harness.meters import CostMeter, measure_cost
from ..harness.models import BuildArtifact, CostMeasurement, SolutionCosts
from ..pipeline.errors import IoError, NonpositiveBaseline
from ..pipeline.logger import get_logger

logger = get_logger(__name__)

DEFAULT_TOP_K = 10


class BenchmarkEntry(BaseModel):
    """One ranked test of one solution."""

    model_config = ConfigDict(frozen=True)

    problem_id: str
    solution_id: str
    rank: int = Field(ge=1)
    input: TestInput
    cost: CostMeasurement
    slowdown_vs_default: float

    @property
    def input_sha256(self) -> str:
        return hashlib.sha256(self.input.input_bytes).hexdigest()


def dedupe_inputs(candidates: Sequence[TestInput]) -> List[TestInput]:
    """Drop byte-identical candidates, keeping the first occurrence."""
    seen = set()
    unique: List[TestInput] = []
    for candidate in candidates:
        digest = hashlib.sha256(candidate.input_bytes).digest()
        if digest not in seen:
            seen.add(digest)
            unique.append(candidate)
    return unique


def rank_measurements(
    problem_id: str,
    solution_id: str,
    measured: Sequence[tuple],
    default_mean: float,
    k: int = DEFAULT_TOP_K,
) -> List[BenchmarkEntry]:
    """
    Turn (input, cost) pairs into the top-k entries.

    Sorted by mean cost descending; equal costs keep candidate order. The
    slowdown is the mean cost over the default-test mean.

    Raises:
        ValueError: k is below 1
        NonpositiveBaseline: Default-test mean is not positive
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if default_mean <= 0:
        raise NonpositiveBaseline(f"default-test mean cost of {solution_id} is {default_mean}")
    order = sorted(range(len(measured)), key=lambda i: (-measured[i][1].mean_cost, i))
    return [
        BenchmarkEntry(
            problem_id=problem_id,
            solution_id=solution_id,
            rank=rank,
            input=measured[i][0],
            cost=measured[i][1],
            slowdown_vs_default=measured[i][1].mean_cost / default_mean,
        )
        for rank, i in enumerate(order[:k], start=1)
    ]


async def default_mean_cost(
    harness: Harness,
    meter: CostMeter,
    artifact: BuildArtifact,
    problem: Problem,
    runs: int = 5,
) -> float:
    """Mean over default tests of each test's mean cost."""
    costs = [
        (await measure_cost(harness, meter, artifact, test, runs)).mean_cost
        for test in problem.default_tests
    ]
    return float(np.mean(costs)) if costs else 0.0


def write_solution_entries(bench_dir, problem_id: str, solution_id: str,
                           entries: Sequence[BenchmarkEntry]) -> Path:
    """Write tests/rank_<r>.in and meta.json for one solution, replacing earlier contents."""
    out = Path(bench_dir) / "problems" / problem_id / "solutions" / solution_id
    tests_dir = out / "tests"
    try:
        shutil.rmtree(tests_dir, ignore_errors=True)
        tests_dir.mkdir(parents=True)
        for entry in entries:
            (tests_dir / f"rank_{entry.rank}.in").write_bytes(entry.input.input_bytes)
        meta = {
            "solution_id": solution_id,
            "problem_id": problem_id,
            "entries": [
                {
                    "rank": e.rank,
                    "input_id": e.input.id,
                    "input_sha256": e.input_sha256,
                    "mean_cost": e.cost.mean_cost,
                    "per_run_costs": e.cost.per_run_costs,
                    "slowdown_vs_default": e.slowdown_vs_default,
                }
                for e in entries
            ],
        }
        (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write benchmark entries to {out}: {e}") from e
    return out


async def assemble_benchmark(
    harness: Harness,
    meter: CostMeter,
    problem: Problem,
    solutions: Mapping[str, BuildArtifact],
    candidate_inputs: Sequence[TestInput],
    k: int = DEFAULT_TOP_K,
    bench_dir=None,
    default_costs: Optional[Mapping[str, SolutionCosts]] = None,
    runs: int = 5,
) -> Dict[str, List[BenchmarkEntry]]:
    """
    Rank filtered candidates per solution and write the benchmark layout.

    Args:
        harness: Harness
        meter: Cost meter
        problem: Problem the candidates belong to
        solutions: Builds keyed by solution id
        candidate_inputs: Inputs that passed validity and consistency
        k: Tests kept per solution
        bench_dir: Benchmark root (nothing is written when None)
        default_costs: Already measured default-test costs, keyed by solution id
        runs: Runs per cost measurement

    Returns:
        Entries keyed by solution id, rank order

    Raises:
        MeterUnavailable: Meter cannot measure
        NonpositiveBaseline: A solution costs nothing on its default tests
        IoError: Benchmark directory cannot be written
    """
    candidates = dedupe_inputs(candidate_inputs)
    result: Dict[str, List[BenchmarkEntry]] = {}

    for solution_id, artifact in sorted(solutions.items()):
        measured = [
            (candidate, await measure_cost(harness, meter, artifact, candidate, runs))
            for candidate in candidates
        ]
        if default_costs and solution_id in default_costs:
            default_mean = default_costs[solution_id].mean_cost
        else:
            default_mean = await default_mean_cost(harness, meter, artifact, problem, runs)

        entries = rank_measurements(problem.id, solution_id, measured, default_mean, k)
        result[solution_id] = entries
        if bench_dir is not None:
            write_solution_entries(bench_dir, problem.id, solution_id, entries)

        if entries:
            logger.info(
                f"🏁 {solution_id}: top test costs {entries[0].cost.mean_cost:,.0f} "
                f"({entries[0].slowdown_vs_default:.2f}x default)",
                extra={"problem_id": problem.id, "solution_id": solution_id},
            )
    return result


class SolutionBenchmark(BaseModel):
    """One solution's entries as read back from disk."""

    problem_id: str
    solution_id: str
    mean_costs: List[float]
    inputs: List[TestInput]

    @property
    def mean_cost(self) -> float:
        return float(np.mean(self.mean_costs)) if self.mean_costs else 0.0


def _rank_of(path: Path) -> int:
    return int(path.stem.split("_")[1])


def load_benchmark(bench_dir) -> Dict[str, SolutionBenchmark]:
    """
    Read a benchmark directory, keyed by solution id.

    Directories without meta.json (e.g. plain test dumps) get empty cost lists.
    """
    root = Path(bench_dir) / "problems"
    loaded: Dict[str, SolutionBenchmark] = {}
    for solution_dir in sorted(root.glob("*/solutions/*")):
        problem_id = solution_dir.parent.parent.name
        meta_path = solution_dir / "meta.json"
        entries = json.loads(meta_path.read_text())["entries"] if meta_path.is_file() else []
        ids = {e["rank"]: e.get("input_id", "") for e in entries}
        inputs = []
        for path in sorted((solution_dir / "tests").glob("rank_*.in"), key=_rank_of):
            rank = _rank_of(path)
            inputs.append(TestInput(
                id=ids.get(rank) or f"{solution_dir.name}_rank_{rank}",
                input_bytes=path.read_bytes(),
                origin=Origin.GENERATED,
            ))
        loaded[solution_dir.name] = SolutionBenchmark(
            problem_id=problem_id,
            solution_id=solution_dir.name,
            mean_costs=[e["mean_cost"] for e in sorted(entries, key=lambda e: e["rank"])],
            inputs=inputs,
        )
    return loaded
