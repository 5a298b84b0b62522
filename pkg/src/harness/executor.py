"""
Build and execution harness.

Compiles solutions with the configured toolchains and runs artifacts under
wall-time and memory limits, each execution in a private scratch directory
with its whole process group terminated afterwards.
"""

import asyncio
import hashlib
import os
import resource
import shutil
import signal
import tempfile
import time
from pathlib import Path
from typing import Awaitable, Callable, Dict, List, Optional, Tuple, TypeVar

from ..corpus.models import LANGUAGE_EXTENSIONS, Solution, TestInput
from ..pipeline.errors import BuildFailed, InputTooLarge, SandboxFailure
from ..pipeline.logger import get_logger
from ..utils.metrics import metrics
from .models import (
    ArtifactKind,
    BuildArtifact,
    ExecutionLimits,
    ExecutionResult,
    ExitKind,
    ExitStatus,
)
from .sentinels import parse_checker_hits
from .toolchains import ToolchainRegistry

logger = get_logger(__name__)

T = TypeVar("T")

ABORT_ENV = "WEDGE_ABORT"
OOM_MARKERS = (b"MemoryError", b"std::bad_alloc", b"Cannot allocate memory")


def safe_name(identifier: str) -> str:
    """File-system safe form of an id."""
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in identifier)


class Harness:
    """Builds and runs solution programs."""

    def __init__(
        self,
        toolchains: ToolchainRegistry,
        work_dir,
        limits: Optional[ExecutionLimits] = None,
        jobs: int = 1,
        build_timeout: float = 120.0,
    ):
        """
        Initialize the harness.

        Args:
            toolchains: Language toolchains
            work_dir: Directory holding build outputs and scratch space
            limits: Default execution limits
            jobs: Maximum concurrent executions
            build_timeout: Compile timeout in seconds
        """
        self.toolchains = toolchains
        self.work_dir = Path(work_dir).resolve()
        self.limits = limits or ExecutionLimits()
        self.build_timeout = build_timeout
        self.semaphore = asyncio.Semaphore(jobs)
        self._build_locks: Dict[str, asyncio.Lock] = {}

        (self.work_dir / "builds").mkdir(parents=True, exist_ok=True)
        (self.work_dir / "scratch").mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------------
    # Build
    # ------------------------------------------------------------------

    async def build(self, solution: Solution, profiling: bool = False) -> BuildArtifact:
        """
        Build a solution.

        Args:
            solution: Solution to build
            profiling: Enable the line-profile channel

        Returns:
            Runnable artifact

        Raises:
            BuildFailed: Compiler rejected the source
            UnsupportedLanguage: No toolchain for the solution's language
        """
        return await self.build_source(solution.id, solution.language, solution.source, profiling)

    async def build_source(
        self,
        solution_id: str,
        language: str,
        source: str,
        profiling: bool = False,
        variant: str = "",
    ) -> BuildArtifact:
        """
        Build arbitrary source text for a solution id.

        Args:
            solution_id: Owning solution
            language: Language tag
            source: Program text
            profiling: Enable the line-profile channel
            variant: Build directory qualifier (e.g. "instrumented")

        Returns:
            Runnable artifact
        """
        toolchain = self.toolchains.get(language)
        flavour = "profile" if profiling else "release"
        if variant:
            flavour = f"{variant}-{flavour}"
        build_dir = self.work_dir / "builds" / safe_name(solution_id) / flavour
        ext = toolchain.extensions[0] if toolchain.extensions else LANGUAGE_EXTENSIONS.get(language, language)
        name = safe_name(solution_id)
        src_path = build_dir / f"{name}.{ext}"
        out_path = build_dir / name
        digest = hashlib.sha256(source.encode("utf-8")).hexdigest()
        stamp = build_dir / ".source_sha256"

        lock = self._build_locks.setdefault(str(build_dir), asyncio.Lock())
        async with lock:
            entry = out_path if toolchain.kind == ArtifactKind.NATIVE_BINARY else src_path
            if stamp.is_file() and stamp.read_text() == digest and entry.exists():
                log_path = build_dir / "build.log"
                return BuildArtifact(
                    solution_id=solution_id,
                    kind=toolchain.kind,
                    entry=str(entry),
                    language=language,
                    build_log=log_path.read_text(encoding="utf-8") if log_path.is_file() else "",
                    profiling_enabled=profiling,
                    source_path=str(src_path),
                    build_dir=str(build_dir),
                )

            if build_dir.exists():
                shutil.rmtree(build_dir)
            build_dir.mkdir(parents=True)
            src_path.write_text(source, encoding="utf-8")

            log_parts: List[str] = []
            for cmd in toolchain.build_commands(src_path, out_path, profiling):
                code, output = await self._run_build_command(cmd, build_dir)
                log_parts.append(f"$ {' '.join(cmd)}\n{output}")
                if code != 0:
                    metrics.increment_build(failed=True)
                    log = "\n".join(log_parts)
                    logger.warning(
                        f"Build failed for {solution_id}",
                        extra={"solution_id": solution_id},
                    )
                    raise BuildFailed(log)

            build_log = "\n".join(log_parts)
            (build_dir / "build.log").write_text(build_log, encoding="utf-8")
            stamp.write_text(digest)
            metrics.increment_build()
            logger.debug(f"Built {solution_id} ({flavour})", extra={"solution_id": solution_id})

            return BuildArtifact(
                solution_id=solution_id,
                kind=toolchain.kind,
                entry=str(entry),
                language=language,
                build_log=build_log,
                profiling_enabled=profiling,
                source_path=str(src_path),
                build_dir=str(build_dir),
            )

    async def _run_build_command(self, cmd: List[str], cwd: Path) -> Tuple[int, str]:
        """Run one compiler command, returning exit code and combined output."""
        try:
            process = await asyncio.create_subprocess_exec(
                *cmd,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.STDOUT,
                cwd=str(cwd),
                start_new_session=True,
            )
        except OSError as e:
            return 127, f"cannot start compiler: {e}"

        try:
            output, _ = await asyncio.wait_for(process.communicate(), timeout=self.build_timeout)
        except asyncio.TimeoutError:
            _kill_group(process)
            await process.wait()
            return 124, f"compilation timed out after {self.build_timeout}s"
        return process.returncode, output.decode("utf-8", errors="replace")

    # ------------------------------------------------------------------
    # Execute
    # ------------------------------------------------------------------

    async def execute(
        self,
        artifact: BuildArtifact,
        test_input: TestInput,
        limits: Optional[ExecutionLimits] = None,
        env: Optional[Dict[str, str]] = None,
    ) -> ExecutionResult:
        """
        Run an artifact on one input.

        Args:
            artifact: Artifact to run
            test_input: Input delivered on stdin
            limits: Override of the default limits
            env: Extra environment variables (WEDGE_ABORT is unset unless given here)

        Returns:
            Captured execution result

        Raises:
            InputTooLarge: Input exceeds limits.max_input_bytes
            SandboxFailure: Process could not be started
        """
        result, _ = await self.run_in_scratch(artifact, test_input, limits=limits, env=env)
        return result

    async def run_in_scratch(
        self,
        artifact: BuildArtifact,
        test_input: TestInput,
        limits: Optional[ExecutionLimits] = None,
        env: Optional[Dict[str, str]] = None,
        command: Optional[List[str]] = None,
        prepare: Optional[Callable[[Path], Tuple[List[str], Dict[str, str]]]] = None,
        collect: Optional[Callable[[Path], Awaitable[T]]] = None,
    ) -> Tuple[ExecutionResult, Optional[T]]:
        """
        Run an artifact in a fresh scratch directory.

        Args:
            artifact: Artifact to run
            test_input: Input delivered on stdin
            limits: Override of the default limits
            env: Extra environment variables
            command: Explicit argument vector (defaults to the toolchain run command)
            prepare: Hook returning (command, extra env) for a scratch dir
            collect: Coroutine reading side outputs from the scratch dir before cleanup

        Returns:
            Tuple of (result, collected value or None)
        """
        limits = limits or self.limits
        if test_input.size > limits.max_input_bytes:
            raise InputTooLarge(
                f"input {test_input.id} is {test_input.size} bytes, limit {limits.max_input_bytes}"
            )

        async with self.semaphore:
            scratch = Path(tempfile.mkdtemp(prefix="exec-", dir=self.work_dir / "scratch"))
            try:
                cmd = command or self.toolchains.get(artifact.language).run_command(Path(artifact.entry))
                run_env = {k: v for k, v in os.environ.items() if k != ABORT_ENV}
                if prepare:
                    cmd, extra_env = prepare(scratch)
                    run_env.update(extra_env)
                if env:
                    run_env.update(env)

                result = await self._run_process(cmd, test_input.input_bytes, limits, run_env, scratch)
                collected = await collect(scratch) if collect else None
                return result, collected
            finally:
                shutil.rmtree(scratch, ignore_errors=True)

    async def _run_process(
        self,
        cmd: List[str],
        input_bytes: bytes,
        limits: ExecutionLimits,
        env: Dict[str, str],
        cwd: Path,
    ) -> ExecutionResult:
        """Spawn, feed, wait and classify one process."""
        memory_cap = limits.memory_cap

        def apply_limits() -> None:
            resource.setrlimit(resource.RLIMIT_AS, (memory_cap, memory_cap))

        start = time.monotonic()
        try:
            process = await asyncio.create_subprocess_exec(
                *cmd,
                stdin=asyncio.subprocess.PIPE,
                stdout=asyncio.subprocess.PIPE,
                stderr=asyncio.subprocess.PIPE,
                cwd=str(cwd),
                env=env,
                start_new_session=True,
                preexec_fn=apply_limits,
            )
        except OSError as e:
            raise SandboxFailure(f"cannot start {cmd[0]}: {e}") from e

        timed_out = False
        try:
            stdout, stderr = await asyncio.wait_for(
                process.communicate(input_bytes), timeout=limits.wall_timeout
            )
        except asyncio.TimeoutError:
            timed_out = True
            _kill_group(process)
            try:
                stdout, stderr = await asyncio.wait_for(process.communicate(), timeout=5)
            except Exception:
                stdout, stderr = b"", b""
            await process.wait()
        finally:
            # Reap anything the program forked
            _kill_group(process)

        wall_time = time.monotonic() - start
        hits = parse_checker_hits(stderr)
        status = _classify(process.returncode, timed_out, hits, stderr)
        metrics.increment_execution(status.kind.value)
        for checker_id in hits:
            metrics.increment_checker_hit(checker_id)

        return ExecutionResult(
            stdout=stdout,
            stderr=stderr,
            exit=status,
            wall_time=wall_time,
            checker_hits=hits,
        )


def _kill_group(process: asyncio.subprocess.Process) -> None:
    """Kill the process group of a child started with start_new_session."""
    try:
        os.killpg(process.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _classify(returncode: Optional[int], timed_out: bool, hits, stderr: bytes) -> ExitStatus:
    """Map a return code to an exit classification."""
    if timed_out:
        return ExitStatus(kind=ExitKind.TIMEOUT)
    if returncode is None:
        return ExitStatus(kind=ExitKind.SIGNALED, signal=signal.SIGKILL)
    if returncode == 0:
        return ExitStatus(kind=ExitKind.OK, code=0)
    if any(marker in stderr for marker in OOM_MARKERS):
        return ExitStatus(kind=ExitKind.OOM, code=returncode if returncode > 0 else None)
    if returncode < 0:
        signum = -returncode
        if signum == signal.SIGABRT and hits:
            return ExitStatus(kind=ExitKind.CONSTRAINT_ABORT, signal=signum)
        return ExitStatus(kind=ExitKind.SIGNALED, signal=signum)
    # Shells report a signalled child as 128+n
    if returncode == 128 + signal.SIGABRT and hits:
        return ExitStatus(kind=ExitKind.CONSTRAINT_ABORT, signal=signal.SIGABRT)
    return ExitStatus(kind=ExitKind.NONZERO, code=returncode)
