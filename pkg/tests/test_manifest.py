"""Tests for the run manifest."""

import json

import pytest

from src.pipeline.errors import MissingManifest, StagePreconditionError
from src.pipeline.manifest import STAGES, ManifestStore


@pytest.fixture
def store(tmp_path) -> ManifestStore:
    return ManifestStore.create(tmp_path / "run", "/corpus", {"fuzz": {"energy": 32}}, run_id="r1")


def test_create_writes_manifest(store):
    data = json.loads(store.path.read_text())

    assert data["run_id"] == "r1"
    assert data["corpus_root"] == "/corpus"
    assert data["config"] == {"fuzz": {"energy": 32}}
    assert data["stages"] == {}


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingManifest):
        ManifestStore(tmp_path).load()


def test_require_names_first_missing_stage(store):
    with pytest.raises(StagePreconditionError) as excinfo:
        store.manifest.require("fuzz", "mutators", "constraints")

    assert excinfo.value.missing == "mutators"
    assert excinfo.value.exit_code == 3
    assert excinfo.value.to_dict()["missing_stage"] == "mutators"


@pytest.mark.asyncio
async def test_record_complete_and_reload(store):
    output = store.run_dir / "profiles" / "s1" / "costs.json"
    output.parent.mkdir(parents=True)
    output.write_text("{}")

    await store.record("s1", "ingest", "ok", mean_cost=12.5)
    await store.record("s2", "ingest", "failed", {"error": "BuildFailed", "message": "boom"})
    await store.complete("ingest", [output], survivors=1)

    reloaded = ManifestStore(store.run_dir).load()
    assert reloaded.is_complete("ingest")
    assert reloaded.stages["ingest"].outputs == ["profiles/s1/costs.json"]
    assert reloaded.stages["ingest"].options == {"survivors": 1}
    assert reloaded.ids_with_status("ingest") == ["s1"]
    assert reloaded.ids_with_status("ingest", "failed") == ["s2"]
    assert reloaded.solutions["s1"]["ingest"].detail == {"mean_cost": 12.5}
    reloaded.require("profile", "ingest")


@pytest.mark.asyncio
async def test_reset_forgets_stage(store):
    await store.record("s1", "profile", "ok")
    await store.record("s1", "ingest", "ok")
    await store.complete("profile")

    await store.reset("profile")

    assert not store.manifest.is_complete("profile")
    assert list(store.manifest.solutions["s1"]) == ["ingest"]


def test_create_on_existing_run_keeps_run_id(store):
    reopened = ManifestStore.create(store.run_dir, "/other", {})

    assert reopened.manifest.run_id == "r1"
    assert reopened.manifest.corpus_root == "/other"


def test_stage_order():
    assert STAGES[:3] == ("ingest", "profile", "mine-pairs")
    assert "export-aflpp" in STAGES
