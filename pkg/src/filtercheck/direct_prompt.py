"""
Direct-prompt baseline.

Asks the provider for a stress-test generator script without any profiling
or constraint context, runs it once and collects the tests it writes. The
tests are ranked with the same benchmark assembly as fuzzer outputs so both
can be compared by evaluate.
"""

from pathlib import Path
from typing import List

from ..constraints.parsing import code_block
from ..constraints.prompts import render_direct_prompt
from ..constraints.providers import Conversation
from ..corpus.models import Origin, Problem, TestInput
from ..harness.executor import Harness
from ..pipeline.errors import SandboxFailure
from ..pipeline.logger import get_logger

logger = get_logger(__name__)

GENERATOR_LANGUAGE = "python3"
DEFAULT_NUMBER_OF_TESTS = 10


async def generate_direct_tests(
    conversation: Conversation,
    harness: Harness,
    problem: Problem,
    work_dir,
    number_of_tests: int = DEFAULT_NUMBER_OF_TESTS,
    timeout: float = 60.0,
) -> List[TestInput]:
    """
    Generate tests with a provider-written generator script.

    Args:
        conversation: Fresh provider conversation
        harness: Harness used to build and run the generator
        problem: Target problem
        work_dir: Directory receiving gen.py and the transcript
        number_of_tests: Tests requested from the generator
        timeout: Generator wall timeout

    Returns:
        Generated inputs in file name order

    Raises:
        ProviderError: Provider failed
        BuildFailed: Generator script does not compile
        SandboxFailure: Generator failed or wrote no tests
    """
    out = Path(work_dir)
    out.mkdir(parents=True, exist_ok=True)

    reply = await conversation.ask(render_direct_prompt(problem, number_of_tests))
    conversation.write(out)
    source = code_block(reply) or reply
    (out / "gen.py").write_text(source, encoding="utf-8")

    artifact = await harness.build_source(f"direct-{problem.id}", GENERATOR_LANGUAGE, source)
    toolchain = harness.toolchains.get(GENERATOR_LANGUAGE)

    def prepare(scratch: Path):
        (scratch / "tests").mkdir()
        return toolchain.run_command(Path(artifact.entry)) + [str(scratch / "tests")], {}

    async def collect(scratch: Path) -> List[bytes]:
        return [p.read_bytes() for p in sorted((scratch / "tests").glob("*.in"))]

    limits = harness.limits.model_copy(update={"wall_timeout": timeout})
    result, written = await harness.run_in_scratch(
        artifact,
        TestInput(id=f"{problem.id}_direct_gen", input_bytes=b""),
        limits=limits,
        prepare=prepare,
        collect=collect,
    )
    if not result.exit.ok or not written:
        stderr = result.stderr.decode("utf-8", errors="replace").strip()[-1000:]
        raise SandboxFailure(
            f"direct-prompt generator for {problem.id} produced no tests "
            f"(exit {result.exit.kind.value}): {stderr}"
        )

    tests = [
        TestInput(id=f"{problem.id}_direct_{i:02d}", input_bytes=data, origin=Origin.GENERATED)
        for i, data in enumerate(written[:number_of_tests], start=1)
    ]
    logger.info(
        f"🧾 Direct-prompt generator wrote {len(tests)} tests for {problem.id}",
        extra={"problem_id": problem.id},
    )
    return tests
