"""
Harness data models.

Build artifacts, execution limits and results, cost measurements and line
profiles.
"""

from enum import Enum
from typing import Dict, FrozenSet, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ArtifactKind(str, Enum):
    """How an artifact is run."""
    NATIVE_BINARY = "native_binary"
    SCRIPT = "script"


class ExitKind(str, Enum):
    """Classified process outcome."""
    OK = "ok"
    NONZERO = "nonzero"
    SIGNALED = "signaled"
    TIMEOUT = "timeout"
    OOM = "oom"
    CONSTRAINT_ABORT = "constraint_abort"


class MeterKind(str, Enum):
    """Cost meter implementations."""
    HARDWARE_COUNTER = "hardware_counter"
    TRACE_COUNTER = "trace_counter"


class BuildArtifact(BaseModel):
    """A runnable build of one solution."""

    model_config = ConfigDict(frozen=True)

    solution_id: str
    kind: ArtifactKind
    entry: str
    language: str
    build_log: str = ""
    profiling_enabled: bool = False
    source_path: str = ""
    build_dir: str = ""


class ExecutionLimits(BaseModel):
    """Resource limits for one execution."""

    model_config = ConfigDict(frozen=True)

    wall_timeout: float = 10.0
    memory_cap: int = 2 * 1024 ** 3
    max_input_bytes: int = 10 * 1024 ** 2

    @field_validator("wall_timeout", "memory_cap", "max_input_bytes")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """All limits positive."""
        if v <= 0:
            raise ValueError("execution limits must be positive")
        return v


class ExitStatus(BaseModel):
    """Exit classification with the code or signal that produced it."""

    model_config = ConfigDict(frozen=True)

    kind: ExitKind
    code: Optional[int] = None
    signal: Optional[int] = None

    @property
    def ok(self) -> bool:
        """Clean exit with code 0."""
        return self.kind == ExitKind.OK


class ExecutionResult(BaseModel):
    """Outcome of one program run."""

    model_config = ConfigDict(frozen=True)

    stdout: bytes = b""
    stderr: bytes = b""
    exit: ExitStatus
    wall_time: float = 0.0
    checker_hits: FrozenSet[str] = Field(default_factory=frozenset)


class CostMeasurement(BaseModel):
    """Instruction-count cost averaged over repeated runs."""

    model_config = ConfigDict(frozen=True)

    per_run_costs: List[int]
    mean_cost: float = 0.0
    meter: MeterKind = MeterKind.TRACE_COUNTER

    @model_validator(mode="before")
    @classmethod
    def fill_mean(cls, data):
        """Derive mean_cost from per_run_costs."""
        if isinstance(data, dict) and data.get("per_run_costs"):
            costs = data["per_run_costs"]
            data = {**data, "mean_cost": sum(costs) / len(costs)}
        return data

    @field_validator("per_run_costs")
    @classmethod
    def validate_costs(cls, v: List[int]) -> List[int]:
        """Costs are non-empty and non-negative."""
        if not v:
            raise ValueError("per_run_costs must be non-empty")
        if any(c < 0 for c in v):
            raise ValueError("costs must be non-negative")
        return v


class LineProfile(BaseModel):
    """Per-line hit counts of one run."""

    model_config = ConfigDict(frozen=True)

    solution_id: str
    input_id: str
    hits: Dict[int, int]

    @field_validator("hits")
    @classmethod
    def validate_hits(cls, v: Dict[int, int]) -> Dict[int, int]:
        """Line numbers start at 1 and counts are non-negative."""
        for line, count in v.items():
            if line < 1 or count < 0:
                raise ValueError(f"invalid hit entry {line}:{count}")
        return v


class SolutionCosts(BaseModel):
    """Default-test cost table of one solution."""

    solution_id: str
    per_test: Dict[str, CostMeasurement]

    @property
    def mean_cost(self) -> float:
        """Mean over tests of each test's mean cost."""
        if not self.per_test:
            return 0.0
        return sum(m.mean_cost for m in self.per_test.values()) / len(self.per_test)

    @property
    def max_cost(self) -> int:
        """Largest single-run cost over all tests."""
        return max((max(m.per_run_costs) for m in self.per_test.values()), default=0)
