"""
Corpus data models.

Problems, solutions and default tests of a CodeContests-style dataset. All
models are frozen so a loaded corpus can be shared across concurrent stages.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_MAX_INPUT_BYTES = 10 * 1024 * 1024

LANGUAGE_EXTENSIONS: Dict[str, str] = {
    "cpp": "cpp",
    "c": "c",
    "python3": "py",
    "java": "java",
}


class Verdict(str, Enum):
    """Judge verdict attached to a solution."""
    CORRECT = "correct"
    INCORRECT = "incorrect"
    UNKNOWN = "unknown"


class Origin(str, Enum):
    """Where a test input came from."""
    OFFICIAL = "official"
    GENERATED = "generated"


class TestInput(BaseModel):
    """A single program input with optional expected output."""

    model_config = ConfigDict(frozen=True)
    __test__ = False  # not a pytest test class

    id: str
    input_bytes: bytes
    expected_output: Optional[str] = None
    origin: Origin = Origin.OFFICIAL

    @property
    def size(self) -> int:
        """Input length in bytes."""
        return len(self.input_bytes)


class Solution(BaseModel):
    """A single-file solution program."""

    model_config = ConfigDict(frozen=True)

    id: str
    problem_id: str
    language: str
    source: str
    verdict: Verdict = Verdict.UNKNOWN

    @property
    def extension(self) -> str:
        """File extension used when the source is written to disk."""
        return LANGUAGE_EXTENSIONS.get(self.language, self.language)

    @property
    def is_correct(self) -> bool:
        """Only correct solutions take part in fuzzing and benchmarks."""
        return self.verdict == Verdict.CORRECT


class Problem(BaseModel):
    """A coding problem with its statement, default tests and solutions."""

    model_config = ConfigDict(frozen=True)

    id: str
    statement: str
    default_tests: List[TestInput] = Field(default_factory=list)
    solutions: List[Solution] = Field(default_factory=list)

    @field_validator("default_tests")
    @classmethod
    def validate_tests(cls, v: List[TestInput]) -> List[TestInput]:
        """Every default test needs input bytes."""
        for test in v:
            if not test.input_bytes:
                raise ValueError(f"default test {test.id} has empty input")
        return v

    @property
    def languages_present(self) -> set:
        """Language tags used by this problem's solutions."""
        return {s.language for s in self.solutions}

    @property
    def correct_solutions(self) -> List[Solution]:
        """Solutions with a correct verdict, in manifest order."""
        return [s for s in self.solutions if s.is_correct]

    @property
    def official_tests(self) -> List[TestInput]:
        """Default tests that came with the problem."""
        return [t for t in self.default_tests if t.origin == Origin.OFFICIAL]

    def get_solution(self, solution_id: str) -> Solution:
        """Look up a solution by id."""
        for solution in self.solutions:
            if solution.id == solution_id:
                return solution
        raise KeyError(solution_id)

    def get_test(self, test_id: str) -> TestInput:
        """Look up a default test by id."""
        for test in self.default_tests:
            if test.id == test_id:
                return test
        raise KeyError(test_id)


class FilterCriteria(BaseModel):
    """Dataset filtering thresholds."""

    min_instructions: int = 100_000
    min_solutions: int = 10
    min_tests: int = 5
    require_single_output: bool = True
    top_n_by_cv: int = 300

    @field_validator("min_instructions", "min_solutions", "min_tests", "top_n_by_cv")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """All counts positive."""
        if v <= 0:
            raise ValueError("filter counts must be positive")
        return v


class Corpus(BaseModel):
    """All problems of a dataset, keyed by id."""

    model_config = ConfigDict(frozen=True)

    root_path: str = ""
    problems: Dict[str, Problem] = Field(default_factory=dict)

    def solution_index(self) -> Dict[str, Solution]:
        """Map every solution id to its solution."""
        return {s.id: s for p in self.problems.values() for s in p.solutions}

    def problem_of(self, solution_id: str) -> Problem:
        """Return the problem owning a solution."""
        solution = self.solution_index()[solution_id]
        return self.problems[solution.problem_id]


def normalize_output(output) -> str:
    """
    Normalize program output for comparison.

    Strips trailing whitespace on every line and trailing newlines.

    Args:
        output: stdout as bytes or text

    Returns:
        Normalized text
    """
    if isinstance(output, (bytes, bytearray)):
        output = bytes(output).decode("utf-8", errors="replace")
    lines = [line.rstrip() for line in output.replace("\r\n", "\n").split("\n")]
    return "\n".join(lines).rstrip("\n")
