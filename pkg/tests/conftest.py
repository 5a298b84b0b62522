"""Shared fixtures for the WEDGE test suite."""

import json
import sys
from pathlib import Path

import pytest

# Add the project root to Python path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.corpus.models import Origin, Problem, Solution, TestInput, Verdict  # noqa: E402
from src.harness.executor import Harness  # noqa: E402
from src.harness.models import ExecutionLimits  # noqa: E402
from src.harness.toolchains import ToolchainRegistry  # noqa: E402
from src.pipeline.config import DEFAULT_TOOLCHAINS  # noqa: E402

TOY_CORPUS = PROJECT_ROOT / "data" / "toy_corpus"
OFFLINE_DIR = PROJECT_ROOT / "data" / "offline_provider"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def make_input(test_id: str, text: str, origin: Origin = Origin.OFFICIAL) -> TestInput:
    return TestInput(id=test_id, input_bytes=text.encode(), origin=origin)


def make_solution(solution_id: str, source: str, problem_id: str = "p1",
                  language: str = "python3") -> Solution:
    return Solution(
        id=solution_id,
        problem_id=problem_id,
        language=language,
        source=source,
        verdict=Verdict.CORRECT,
    )


def write_offline_fixture(directory: Path, rules, files) -> Path:
    """Write a responses.json plus response files for the offline provider."""
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "responses.json").write_text(json.dumps({"rules": rules}), encoding="utf-8")
    for name, content in files.items():
        (directory / name).write_text(content, encoding="utf-8")
    return directory


@pytest.fixture
def toolchains() -> ToolchainRegistry:
    return ToolchainRegistry.from_file(DEFAULT_TOOLCHAINS)


@pytest.fixture
def harness(tmp_path, toolchains) -> Harness:
    return Harness(toolchains, tmp_path / "work", ExecutionLimits(wall_timeout=10.0), jobs=4)


@pytest.fixture
def toy_problem() -> Problem:
    from src.corpus.loader import load_corpus

    return load_corpus(TOY_CORPUS).problems["toy_dup"]


@pytest.fixture
def fixture_source():
    """Read a script fixture from tests/fixtures."""
    def read(name: str) -> str:
        return (FIXTURES / name).read_text(encoding="utf-8")
    return read
