"""
Run manifest.

Every run directory has a manifest.json recording the corpus, the effective
configuration, which stages completed (with the files they wrote) and the
status of each solution in each stage. Writes go through a single lock and
are atomic (temporary file plus rename), so an interrupted run can resume
from the last completed stage.
"""

import asyncio
import json
import os
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from pydantic import BaseModel, Field

from .errors import MissingManifest, StagePreconditionError
from .logger import get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"

STAGES = (
    "ingest",
    "profile",
    "mine-pairs",
    "constraints",
    "mutators",
    "fuzz",
    "filter",
    "assemble",
    "evaluate",
    "direct-baseline",
    "export-aflpp",
)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


class StageRecord(BaseModel):
    """Completion marker of one stage."""

    completed_at: str
    options: Dict[str, Any] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)


class SolutionStatus(BaseModel):
    """Outcome of one stage for one solution."""

    status: str
    error: Optional[Dict[str, Any]] = None
    detail: Dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    """State of one pipeline run."""

    run_id: str
    corpus_root: str
    created_at: str = Field(default_factory=utc_now)
    config: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    stages: Dict[str, StageRecord] = Field(default_factory=dict)
    # solution_id (or problem_id for per-problem stages) -> stage -> status
    solutions: Dict[str, Dict[str, SolutionStatus]] = Field(default_factory=dict)

    def is_complete(self, stage: str) -> bool:
        return stage in self.stages

    def require(self, stage: str, *needed: str) -> None:
        """
        Check that the stages a stage depends on have completed.

        Raises:
            StagePreconditionError: Naming the first missing stage
        """
        for dependency in needed:
            if not self.is_complete(dependency):
                raise StagePreconditionError(stage, dependency, f"run 'wedge {dependency}' first")

    def ids_with_status(self, stage: str, status: str = "ok") -> List[str]:
        """Sorted ids whose record for a stage has the given status."""
        return sorted(
            key for key, records in self.solutions.items()
            if records.get(stage) and records[stage].status == status
        )


class ManifestStore:
    """Serialized reader and writer of a run's manifest."""

    def __init__(self, run_dir):
        """
        Initialize manifest store.

        Args:
            run_dir: Run directory holding manifest.json
        """
        self.run_dir = Path(run_dir)
        self.path = self.run_dir / MANIFEST_NAME
        self.lock = asyncio.Lock()
        self.manifest: Optional[RunManifest] = None

    @classmethod
    def create(cls, run_dir, corpus_root: str, config: Dict[str, Dict[str, Any]],
               run_id: Optional[str] = None) -> "ManifestStore":
        """Start a new run directory."""
        store = cls(run_dir)
        store.run_dir.mkdir(parents=True, exist_ok=True)
        if store.path.is_file():
            store.load()
            store.manifest.config = config
            store.manifest.corpus_root = corpus_root
        else:
            store.manifest = RunManifest(
                run_id=run_id or uuid.uuid4().hex[:12],
                corpus_root=corpus_root,
                config=config,
            )
        store._write()
        return store

    def load(self) -> RunManifest:
        """
        Read the manifest from disk.

        Raises:
            MissingManifest: Run directory has no manifest
        """
        if not self.path.is_file():
            raise MissingManifest(f"no {MANIFEST_NAME} in run directory {self.run_dir}")
        self.manifest = RunManifest.model_validate_json(self.path.read_text(encoding="utf-8"))
        return self.manifest

    def _write(self) -> None:
        tmp = self.path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(self.manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, self.path)

    def relative(self, path) -> str:
        """Path relative to the run directory (absolute when outside it), as stored in the manifest."""
        resolved = Path(path).resolve()
        try:
            return str(resolved.relative_to(self.run_dir.resolve()))
        except ValueError:
            return str(resolved)

    async def record(self, key: str, stage: str, status: str, error: Optional[Dict[str, Any]] = None,
                     **detail: Any) -> None:
        """Record a per-solution (or per-problem) outcome."""
        async with self.lock:
            self.manifest.solutions.setdefault(key, {})[stage] = SolutionStatus(
                status=status, error=error, detail=detail
            )
            self._write()

    async def complete(self, stage: str, outputs: Iterable = (), **options: Any) -> None:
        """Mark a stage completed with the files it produced."""
        async with self.lock:
            self.manifest.stages[stage] = StageRecord(
                completed_at=utc_now(),
                options=options,
                outputs=sorted({self.relative(p) for p in outputs}),
            )
            self._write()
        logger.info(f"✅ Stage {stage} completed", extra={"stage": stage, "run_id": self.manifest.run_id})

    async def reset(self, stage: str) -> None:
        """Forget a stage (used by --force) and its per-solution records."""
        async with self.lock:
            self.manifest.stages.pop(stage, None)
            for records in self.manifest.solutions.values():
                records.pop(stage, None)
            self._write()
