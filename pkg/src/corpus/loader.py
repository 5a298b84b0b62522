"""
Corpus loader.

Reads and writes the on-disk corpus layout:

    <root>/problems/<pid>/manifest.json
    <root>/problems/<pid>/statement.md
    <root>/problems/<pid>/tests/<tid>.in, <tid>.out
    <root>/problems/<pid>/solutions/<sid>.<ext>
"""

import json
from pathlib import Path
from typing import Dict, List, Set

from pydantic import ValidationError

from ..pipeline.errors import DuplicateId, MalformedEntry, MissingManifest
from ..pipeline.logger import get_logger
from .models import Corpus, Origin, Problem, Solution, TestInput, Verdict

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


def load_corpus(root_path) -> Corpus:
    """
    Load every problem under a corpus root.

    Args:
        root_path: Corpus root directory

    Returns:
        Corpus with all problems, solutions and tests

    Raises:
        MissingManifest: No problem manifests under the root
        MalformedEntry: A problem directory lacks its manifest, or a manifest or
            file is invalid (first of all reported issues)
        DuplicateId: A problem or solution id is used twice
    """
    root = Path(root_path)
    problems_dir = root / "problems"
    problem_dirs = sorted(p for p in problems_dir.iterdir() if p.is_dir()) if problems_dir.is_dir() else []
    if not any((p / MANIFEST_NAME).is_file() for p in problem_dirs):
        raise MissingManifest(f"no problem manifests found under {root / 'problems'}")

    problems: Dict[str, Problem] = {}
    solution_ids: Set[str] = set()
    issues: List[MalformedEntry] = []

    for problem_dir in problem_dirs:
        try:
            manifest_path = problem_dir / MANIFEST_NAME
            if not manifest_path.is_file():
                raise MalformedEntry(str(problem_dir), f"missing {MANIFEST_NAME}")
            problem = _load_problem(manifest_path)
        except MalformedEntry as e:
            logger.error(f"❌ Malformed corpus entry {e.path}: {e.reason}")
            issues.append(e)
            continue

        if problem.id in problems:
            raise DuplicateId(problem.id)
        for solution in problem.solutions:
            if solution.id in solution_ids:
                raise DuplicateId(solution.id)
            solution_ids.add(solution.id)
        problems[problem.id] = problem

    if issues:
        first = issues[0]
        reason = first.reason
        if len(issues) > 1:
            reason += f" (and {len(issues) - 1} more malformed entries)"
        raise MalformedEntry(first.path, reason)

    logger.info(f"📚 Loaded corpus with {len(problems)} problems from {root}")
    return Corpus(root_path=str(root), problems=problems)


def _read_text(path: Path) -> str:
    """Decode a file as UTF-8 keeping its line endings."""
    try:
        return path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as e:
        raise MalformedEntry(str(path), f"not valid UTF-8: {e}")


def _load_problem(manifest_path: Path) -> Problem:
    """Load one problem directory."""
    problem_dir = manifest_path.parent
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise MalformedEntry(str(manifest_path), f"unreadable manifest: {e}")

    for key in ("id", "tests", "solutions"):
        if key not in manifest:
            raise MalformedEntry(str(manifest_path), f"missing field '{key}'")

    pid = manifest["id"]
    statement_path = problem_dir / "statement.md"
    if not statement_path.is_file():
        raise MalformedEntry(str(statement_path), "statement file missing")

    tests = []
    seen_tests: Set[str] = set()
    for entry in manifest["tests"]:
        tid = entry.get("id")
        if not tid:
            raise MalformedEntry(str(manifest_path), "test entry without id")
        if tid in seen_tests:
            raise DuplicateId(f"{pid}/{tid}")
        seen_tests.add(tid)

        input_path = problem_dir / "tests" / f"{tid}.in"
        output_path = problem_dir / "tests" / f"{tid}.out"
        if not input_path.is_file():
            raise MalformedEntry(str(input_path), "test input missing")
        input_bytes = input_path.read_bytes()
        if not input_bytes:
            raise MalformedEntry(str(input_path), "test input is empty")

        try:
            origin = Origin(entry.get("origin", "official"))
        except ValueError:
            raise MalformedEntry(str(manifest_path), f"test {tid}: unknown origin {entry.get('origin')!r}")

        tests.append(TestInput(
            id=tid,
            input_bytes=input_bytes,
            expected_output=_read_text(output_path) if output_path.is_file() else None,
            origin=origin,
        ))

    solutions = []
    seen_solutions: Set[str] = set()
    for entry in manifest["solutions"]:
        sid = entry.get("id")
        language = entry.get("language")
        if not sid or not language:
            raise MalformedEntry(str(manifest_path), "solution entry needs id and language")
        if sid in seen_solutions:
            raise DuplicateId(sid)
        seen_solutions.add(sid)

        candidates = sorted((problem_dir / "solutions").glob(f"{sid}.*"))
        if len(candidates) != 1:
            raise MalformedEntry(
                str(problem_dir / "solutions"),
                f"expected exactly one source file for solution {sid}, found {len(candidates)}",
            )

        try:
            verdict = Verdict(entry.get("verdict", "unknown"))
        except ValueError:
            raise MalformedEntry(str(manifest_path), f"solution {sid}: unknown verdict {entry.get('verdict')!r}")

        solutions.append(Solution(
            id=sid,
            problem_id=pid,
            language=language,
            source=_read_text(candidates[0]),
            verdict=verdict,
        ))

    try:
        return Problem(
            id=pid,
            statement=_read_text(statement_path),
            default_tests=tests,
            solutions=solutions,
        )
    except ValidationError as e:
        raise MalformedEntry(str(manifest_path), str(e))


def save_corpus(corpus: Corpus, root_path) -> None:
    """
    Write a corpus in the on-disk layout.

    Args:
        corpus: Corpus to write
        root_path: Destination root directory
    """
    root = Path(root_path)
    for problem in corpus.problems.values():
        problem_dir = root / "problems" / problem.id
        (problem_dir / "tests").mkdir(parents=True, exist_ok=True)
        (problem_dir / "solutions").mkdir(parents=True, exist_ok=True)

        (problem_dir / "statement.md").write_bytes(problem.statement.encode("utf-8"))
        for test in problem.default_tests:
            (problem_dir / "tests" / f"{test.id}.in").write_bytes(test.input_bytes)
            if test.expected_output is not None:
                (problem_dir / "tests" / f"{test.id}.out").write_bytes(test.expected_output.encode("utf-8"))
        for solution in problem.solutions:
            path = problem_dir / "solutions" / f"{solution.id}.{solution.extension}"
            path.write_bytes(solution.source.encode("utf-8"))

        manifest = {
            "id": problem.id,
            "tests": [{"id": t.id, "origin": t.origin.value} for t in problem.default_tests],
            "solutions": [
                {"id": s.id, "language": s.language, "verdict": s.verdict.value}
                for s in problem.solutions
            ],
        }
        (problem_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
