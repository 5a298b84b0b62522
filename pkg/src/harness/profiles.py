"""
Line profile collection.

Script artifacts are traced by the interpreter tracer; native artifacts built
with coverage are read back through gcov. Both normalize to a LineProfile that
lists every source line, with 0 for lines never executed.
"""

import asyncio
import json
import shutil
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..corpus.models import TestInput
from ..pipeline.errors import ProfileUnavailable
from ..pipeline.logger import get_logger
from .executor import Harness
from .models import ArtifactKind, BuildArtifact, ExecutionLimits, ExecutionResult, LineProfile

logger = get_logger(__name__)

PROFILE_OUT_ENV = "WEDGE_PROFILE_OUT"


def source_line_count(artifact: BuildArtifact) -> int:
    """Number of lines in the artifact's source file."""
    text = Path(artifact.source_path).read_text(encoding="utf-8", errors="replace")
    return max(1, len(text.splitlines()))


def normalize_hits(raw: Dict[int, int], line_count: int) -> Dict[int, int]:
    """Fill every line in [1, line_count] with an explicit hit count."""
    return {line: int(raw.get(line, 0)) for line in range(1, line_count + 1)}


def parse_gcov_text(text: str) -> Dict[int, int]:
    """
    Parse `gcov -t` output into line -> hits.

    Non-executable lines ('-') and unexecuted lines ('#####', '=====') map to 0.
    """
    hits: Dict[int, int] = {}
    for raw_line in text.splitlines():
        parts = raw_line.split(":", 2)
        if len(parts) < 3:
            continue
        count_field, line_field = parts[0].strip(), parts[1].strip()
        if not line_field.isdigit():
            continue
        line_no = int(line_field)
        if line_no == 0:
            continue
        count_field = count_field.rstrip("*")
        hits[line_no] = int(count_field) if count_field.isdigit() else 0
    return hits


async def execute_profiled(
    harness: Harness,
    artifact: BuildArtifact,
    test_input: TestInput,
    limits: Optional[ExecutionLimits] = None,
    env: Optional[Dict[str, str]] = None,
    strict: bool = True,
) -> Tuple[ExecutionResult, Optional[LineProfile]]:
    """
    Execute once and collect the line profile of that run.

    Args:
        harness: Harness running the artifact
        artifact: Artifact built with profiling enabled
        test_input: Input delivered on stdin
        limits: Optional limits override
        env: Extra environment variables
        strict: Raise when the run leaves no profile (otherwise the profile is None)

    Returns:
        Tuple of (execution result, line profile)

    Raises:
        ProfileUnavailable: Artifact has no profile channel or the run produced none
    """
    if not artifact.profiling_enabled:
        raise ProfileUnavailable(f"artifact for {artifact.solution_id} was built without profiling")

    toolchain = harness.toolchains.get(artifact.language)
    line_count = source_line_count(artifact)

    if artifact.kind == ArtifactKind.SCRIPT:
        run_cmd = toolchain.run_command(Path(artifact.entry), profiling=True)

        def prepare(scratch: Path) -> Tuple[List[str], Dict[str, str]]:
            return run_cmd, {PROFILE_OUT_ENV: str(scratch / "lines.json")}

        async def collect(scratch: Path) -> Optional[Dict[int, int]]:
            path = scratch / "lines.json"
            if not path.is_file():
                return None
            return {int(k): v for k, v in json.loads(path.read_text(encoding="utf-8")).items()}

    else:
        run_cmd = toolchain.run_command(Path(artifact.entry))
        build_dir = Path(artifact.build_dir)
        strip = len(build_dir.resolve().parts) - 1

        def prepare(scratch: Path) -> Tuple[List[str], Dict[str, str]]:
            return run_cmd, {"GCOV_PREFIX": str(scratch), "GCOV_PREFIX_STRIP": str(strip)}

        async def collect(scratch: Path) -> Optional[Dict[int, int]]:
            return await _read_gcov(build_dir, scratch, Path(artifact.source_path))

    result, raw = await harness.run_in_scratch(
        artifact, test_input, limits=limits, env=env, prepare=prepare, collect=collect
    )
    if raw is None:
        if not strict:
            return result, None
        raise ProfileUnavailable(
            f"no line profile produced for {artifact.solution_id} on {test_input.id} "
            f"(exit {result.exit.kind.value})"
        )

    profile = LineProfile(
        solution_id=artifact.solution_id,
        input_id=test_input.id,
        hits=normalize_hits({k: v for k, v in raw.items() if 1 <= k <= line_count}, line_count),
    )
    return result, profile


async def collect_line_profile(harness: Harness, artifact: BuildArtifact, test_input: TestInput) -> LineProfile:
    """
    Collect per-line hit counts for one run.

    Args:
        harness: Harness running the artifact
        artifact: Artifact built with profiling=True
        test_input: Input to profile

    Returns:
        Line profile of the run
    """
    _, profile = await execute_profiled(harness, artifact, test_input)
    return profile


async def _read_gcov(build_dir: Path, scratch: Path, source: Path) -> Optional[Dict[int, int]]:
    """Run gcov over the counters written into the scratch dir."""
    if shutil.which("gcov") is None:
        raise ProfileUnavailable("gcov not found on PATH")

    gcda = list(scratch.glob("*.gcda"))
    if not gcda:
        return None
    for gcno in build_dir.glob("*.gcno"):
        shutil.copy(gcno, scratch / gcno.name)

    process = await asyncio.create_subprocess_exec(
        "gcov", "-t", "-o", str(scratch), str(source),
        stdout=asyncio.subprocess.PIPE,
        stderr=asyncio.subprocess.PIPE,
        cwd=str(scratch),
    )
    stdout, stderr = await process.communicate()
    if process.returncode != 0:
        logger.warning(f"gcov failed: {stderr.decode('utf-8', errors='replace')[:500]}")
        return None
    return parse_gcov_text(stdout.decode("utf-8", errors="replace"))
