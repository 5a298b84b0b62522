"""
AFL++ bundle export.

Writes an instrumented target, a Python custom mutator for AFL++ that
forwards to the mutator plugin, the seeds and a run script. AFL++ itself is
never invoked.
"""

import inspect
from pathlib import Path
from string import Template
from typing import Dict, List, Sequence

from pydantic import BaseModel

from ..constraints.instrument import InstrumentedProgram
from ..corpus.models import TestInput
from ..mutation import builtin
from ..mutation.protocol import HOST_PATH
from ..mutation.synthesis import MutatorArtifact, MutatorKind
from ..pipeline.errors import IoError
from ..pipeline.logger import get_logger

logger = get_logger(__name__)

TEMPLATE_DIR = Path(__file__).with_name("templates")
AFL_MAX_INPUT = 10 * 1024 * 1024

# language -> (target extension, build line, run command, afl-fuzz flags)
AFL_TARGETS: Dict[str, tuple] = {
    "cpp": ("cpp", "afl-c++ -O2 -std=c++17 -o target target.cpp", "./target", ""),
    "c": ("c", "afl-cc -O2 -o target target.c -lm", "./target", ""),
    "python3": ("py", "# scripts run uninstrumented (-n)", "python3 target.py", "-n "),
}

_BUILTIN_ADAPTER = '''

def fuzz(buf, add_buf, max_size):
    return builtin_mutate(bytes(buf), random.getrandbits(64), max_size, bytes(add_buf or b""))
'''


class ExportManifest(BaseModel):
    """Files written by an export, relative to the bundle directory."""

    out_dir: str
    files: List[str]


def mutator_impl_source(mutator: MutatorArtifact) -> str:
    """Source of the module the plugin host will load."""
    if mutator.kind == MutatorKind.PLUGIN_PROCESS:
        return Path(mutator.entry).read_text(encoding="utf-8")
    return inspect.getsource(builtin) + _BUILTIN_ADAPTER


def _render(name: str, **values) -> str:
    return Template((TEMPLATE_DIR / name).read_text(encoding="utf-8")).substitute(**values)


def export_aflpp(
    instrumented: InstrumentedProgram,
    mutator: MutatorArtifact,
    out_dir,
    seeds: Sequence[TestInput] = (),
    timeout_ms: int = 10_000,
) -> ExportManifest:
    """
    Write an AFL++ bundle.

    Args:
        instrumented: Instrumented program (becomes target.<ext>)
        mutator: Mutator to wrap
        out_dir: Bundle directory
        seeds: Seed inputs for seeds/
        timeout_ms: Per-execution timeout passed to afl-fuzz

    Returns:
        Manifest of emitted files

    Raises:
        IoError: Bundle directory cannot be written
    """
    if instrumented.language not in AFL_TARGETS:
        raise IoError(f"no AFL++ target recipe for language '{instrumented.language}'")
    ext, build_line, run_command, afl_flags = AFL_TARGETS[instrumented.language]
    compiler = build_line.split()[0] if not build_line.startswith("#") else "afl-cc"

    out = Path(out_dir)
    contents: Dict[str, bytes] = {
        f"target.{ext}": instrumented.source.encode("utf-8"),
        "mutator.py": _render(
            "aflpp_mutator.txt", solution_id=instrumented.solution_id, max_size=AFL_MAX_INPUT
        ).encode("utf-8"),
        "mutator_impl.py": mutator_impl_source(mutator).encode("utf-8"),
        "plugin_host.py": HOST_PATH.read_bytes(),
        "run.sh": _render(
            "run_sh.txt",
            solution_id=instrumented.solution_id,
            compiler=compiler,
            build_command=build_line,
            run_command=run_command,
            afl_flags=afl_flags,
            max_size=AFL_MAX_INPUT,
            timeout_ms=timeout_ms,
        ).encode("utf-8"),
    }
    for i, seed in enumerate(seeds):
        contents[f"seeds/{i:06d}.in"] = seed.input_bytes
    if not seeds:
        contents["seeds/000000.in"] = b"\n"

    try:
        out.mkdir(parents=True, exist_ok=True)
        seed_dir = out / "seeds"
        seed_dir.mkdir(exist_ok=True)
        for stale in seed_dir.glob("*.in"):
            if f"seeds/{stale.name}" not in contents:
                stale.unlink()
        for name, data in contents.items():
            (out / name).write_bytes(data)
        (out / "run.sh").chmod(0o755)
    except OSError as e:
        raise IoError(f"cannot write AFL++ bundle to {out}: {e}") from e

    logger.info(
        f"📦 Exported AFL++ bundle for {instrumented.solution_id} to {out} ({len(contents)} files)",
        extra={"solution_id": instrumented.solution_id},
    )
    return ExportManifest(out_dir=str(out), files=sorted(contents))
