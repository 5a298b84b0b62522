"""
Cost meters.

Two implementations of instruction-count measurement:

- TraceCounterMeter reads the deterministic step count that fixture programs
  print as their final stderr line (``WEDGE_COST:<n>``). Used in CI.
- HardwareCounterMeter wraps the program in ``perf stat`` and reads the
  configured counter event (default ``instructions``). Host-dependent.
"""

import shutil
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..corpus.models import TestInput
from ..pipeline.errors import MeterUnavailable
from ..pipeline.logger import get_logger
from .executor import Harness
from .models import BuildArtifact, CostMeasurement, ExitKind, MeterKind
from .sentinels import parse_trace_cost

logger = get_logger(__name__)


class CostMeter(ABC):
    """Measures the cost of a single run."""

    kind: MeterKind

    @abstractmethod
    async def measure_once(self, harness: Harness, artifact: BuildArtifact, test_input: TestInput) -> int:
        """Run the artifact once and return its cost."""

    def check_available(self) -> None:
        """Raise MeterUnavailable when the meter cannot run on this host."""


class TraceCounterMeter(CostMeter):
    """Reads fixture-reported step counts."""

    kind = MeterKind.TRACE_COUNTER

    async def measure_once(self, harness: Harness, artifact: BuildArtifact, test_input: TestInput) -> int:
        result = await harness.execute(artifact, test_input)
        cost = parse_trace_cost(result.stderr)
        if cost is None:
            raise MeterUnavailable(
                f"no trace counter line from {artifact.solution_id} on {test_input.id} "
                f"(exit {result.exit.kind.value})"
            )
        return cost


class HardwareCounterMeter(CostMeter):
    """Counts retired instructions with perf."""

    kind = MeterKind.HARDWARE_COUNTER

    def __init__(self, event: str = "instructions", perf_binary: str = "perf"):
        """
        Initialize the hardware meter.

        Args:
            event: perf event name to read
            perf_binary: perf executable name or path
        """
        self.event = event
        self.perf_binary = perf_binary

    def check_available(self) -> None:
        if shutil.which(self.perf_binary) is None:
            raise MeterUnavailable(f"'{self.perf_binary}' not found on PATH; hardware counter meter unavailable")

    async def measure_once(self, harness: Harness, artifact: BuildArtifact, test_input: TestInput) -> int:
        self.check_available()
        run_cmd = harness.toolchains.get(artifact.language).run_command(Path(artifact.entry))

        def prepare(scratch: Path) -> Tuple[List[str], Dict[str, str]]:
            stat_file = scratch / "perf.csv"
            cmd = [self.perf_binary, "stat", "-x", ",", "-e", self.event, "-o", str(stat_file), "--"]
            return cmd + run_cmd, {}

        async def collect(scratch: Path) -> Optional[int]:
            stat_file = scratch / "perf.csv"
            if not stat_file.is_file():
                return None
            return parse_perf_stat(stat_file.read_text(encoding="utf-8", errors="replace"), self.event)

        result, cost = await harness.run_in_scratch(artifact, test_input, prepare=prepare, collect=collect)
        if result.exit.kind == ExitKind.TIMEOUT:
            raise MeterUnavailable(f"{artifact.solution_id} timed out on {test_input.id}")
        if cost is None:
            raise MeterUnavailable(f"perf did not report '{self.event}' for {artifact.solution_id}")
        return cost


def parse_perf_stat(text: str, event: str) -> Optional[int]:
    """
    Parse `perf stat -x,` CSV output.

    Args:
        text: perf output file contents
        event: Event name to look for (modifiers like ':u' are accepted)

    Returns:
        Counter value, or None when the event is missing or not counted
    """
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) < 3:
            continue
        value, name = fields[0].strip(), fields[2].strip()
        if name.split(":")[0] != event:
            continue
        if not value.isdigit():
            return None
        return int(value)
    return None


def create_meter(kind: str, event: str = "instructions") -> CostMeter:
    """Build a meter from its configured name."""
    if kind == MeterKind.HARDWARE_COUNTER.value:
        return HardwareCounterMeter(event=event)
    return TraceCounterMeter()


async def measure_cost(
    harness: Harness,
    meter: CostMeter,
    artifact: BuildArtifact,
    test_input: TestInput,
    runs: int = 5,
) -> CostMeasurement:
    """
    Measure the cost of an input over repeated runs.

    Args:
        harness: Harness executing the artifact
        meter: Cost meter
        artifact: Artifact to measure
        test_input: Input to run
        runs: Number of runs to average

    Returns:
        Cost measurement with every per-run cost

    Raises:
        MeterUnavailable: Meter cannot measure on this host or run
    """
    if runs <= 0:
        raise ValueError("runs must be positive")
    meter.check_available()

    costs = []
    for _ in range(runs):
        costs.append(await meter.measure_once(harness, artifact, test_input))
    return CostMeasurement(per_run_costs=costs, meter=meter.kind)
