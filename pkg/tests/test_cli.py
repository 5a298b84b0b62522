"""Tests for the command line and an end-to-end run on the toy corpus."""

import json
import shutil

import pytest

from conftest import OFFLINE_DIR, TOY_CORPUS
from src.pipeline.config import Config
from src.pipeline.errors import ConfigError
from src.pipeline.main import _fuzz_budget, build_parser, main
from src.pipeline.manifest import ManifestStore


class TestParser:

    def test_fuzz_flags(self):
        args = build_parser().parse_args(
            ["fuzz", "runs/r1", "--budget", "2000execs", "--seed", "7", "--no-instr", "--jobs", "2"]
        )

        assert (args.command, args.run, args.budget, args.seed) == ("fuzz", "runs/r1", "2000execs", 7)
        assert args.no_instr and not args.default_mutator
        assert args.jobs == 2

    def test_provider_only_on_provider_stages(self):
        parser = build_parser()

        assert parser.parse_args(["constraints", "r", "--provider", "offline:x"]).provider == "offline:x"
        with pytest.raises(SystemExit):
            parser.parse_args(["profile", "r", "--provider", "offline:x"])

    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_exec_budget_keeps_wall_limit(self):
        args = build_parser().parse_args(["fuzz", "r", "--budget", "2000x"])

        budget = _fuzz_budget(args, Config.load())

        assert budget.max_execs == 2000
        assert budget.wall_seconds == Config.load().fuzz.wall_seconds

    def test_duration_budget(self):
        args = build_parser().parse_args(["fuzz", "r", "--budget", "90s"])

        budget = _fuzz_budget(args, Config.load())

        assert (budget.wall_seconds, budget.max_execs) == (90, None)

    def test_bad_budget(self):
        args = build_parser().parse_args(["fuzz", "r", "--budget", "lots"])

        with pytest.raises(ConfigError):
            _fuzz_budget(args, Config.load())


def test_missing_run_directory(tmp_path, capsys):
    code = main(["profile", str(tmp_path / "absent")])

    assert code == 3
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "MissingManifest"


@pytest.mark.slow
def test_toy_corpus_end_to_end(tmp_path, capsys):
    run = str(tmp_path / "run")
    provider = f"offline:{OFFLINE_DIR}"

    assert main(["ingest", str(TOY_CORPUS), "--run-dir", run, "--jobs", "2"]) == 0
    assert capsys.readouterr().out.strip() == run

    survivors = json.loads((tmp_path / "run" / "corpus" / "survivors.json").read_text())
    assert [s["problem_id"] for s in survivors] == ["toy_dup"]

    # stages refuse to run out of order
    assert main(["fuzz", run, "--budget", "10execs"]) == 3
    assert main(["fuzz", run, "--seed", str(2 ** 64)]) == 2

    assert main(["profile", run]) == 0
    assert main(["mine-pairs", run]) == 0
    assert main(["constraints", run, "--provider", provider]) == 0

    manifest = ManifestStore(run).load()
    assert [manifest.is_complete(s) for s in ("ingest", "profile", "mine-pairs", "constraints")] == [True] * 4
    assert "dup_bucket" in manifest.ids_with_status("constraints")
    pair = json.loads((tmp_path / "run" / "pairs" / "dup_bucket" / "pair.json").read_text())
    assert (pair["slow"], pair["fast"]) == ("t02", "t01")
    assert (tmp_path / "run" / "constraints" / "dup_bucket").is_dir()

    # completed stages are skipped without --force
    completed_at = manifest.stages["profile"].completed_at
    assert main(["profile", run]) == 0
    assert ManifestStore(run).load().stages["profile"].completed_at == completed_at

    assert main(["mutators", run, "--provider", provider]) == 0
    assert main(["fuzz", run, "--budget", "30execs", "--seed", "7"]) == 0
    assert main(["filter", run, "--provider", provider]) == 0
    assert main(["assemble", run, "-k", "10"]) == 0
    assert main(["evaluate", run]) == 0

    manifest = ManifestStore(run).load()
    assert sorted(manifest.ids_with_status("fuzz")) == ["dup_bucket", "dup_counter", "dup_sort"]
    stats = json.loads((tmp_path / "run" / "campaigns" / "dup_bucket" / "stats.json").read_text())
    assert stats["execs"] == 30
    assert stats["checker_hit_fraction"] > 0

    meta = json.loads(
        (tmp_path / "run" / "bench" / "problems" / "toy_dup" / "solutions" / "dup_bucket" / "meta.json").read_text()
    )
    default_mean = 15.6  # (8 + 36 + 9 + 12 + 13) / 5 steps on the default tests
    top = meta["entries"][0]
    assert top["rank"] == 1
    assert top["mean_cost"] >= 10 * default_mean
    assert top["slowdown_vs_default"] == pytest.approx(top["mean_cost"] / default_mean)
    assert all(len(e["per_run_costs"]) == 5 for e in meta["entries"])
    assert [e["mean_cost"] for e in meta["entries"]] == sorted((e["mean_cost"] for e in meta["entries"]), reverse=True)

    report = json.loads((tmp_path / "run" / "reports" / "report.json").read_text())["report"]
    assert report["win_rate"]["wedge"] == 1.0
    assert report["slowdown"]["wedge"]["mean"] >= 10
    assert report["per_program"]["dup_bucket"]["default"] == pytest.approx(default_mean)
    assert (tmp_path / "run" / "reports" / "summary.txt").is_file()


@pytest.mark.slow
def test_same_seed_reproduces_campaign_directories(tmp_path):
    run = str(tmp_path / "run")
    assert main(["ingest", str(TOY_CORPUS), "--run-dir", run]) == 0
    assert main(["profile", run]) == 0

    fuzz = ["fuzz", run, "--no-instr", "--default-mutator", "--budget", "40execs", "--seed", "3"]
    assert main(fuzz) == 0
    shutil.copytree(tmp_path / "run" / "campaigns", tmp_path / "first")
    assert main(fuzz + ["--force"]) == 0

    second = tmp_path / "run" / "campaigns"
    for campaign in sorted((tmp_path / "first").iterdir()):
        first_queue = {p.name: p.read_bytes() for p in (campaign / "queue").iterdir()}
        second_queue = {p.name: p.read_bytes() for p in (second / campaign.name / "queue").iterdir()}
        assert first_queue == second_queue

        first_stats = json.loads((campaign / "stats.json").read_text())
        second_stats = json.loads((second / campaign.name / "stats.json").read_text())
        first_stats.pop("wall_seconds")
        second_stats.pop("wall_seconds")
        assert first_stats == second_stats
        assert first_stats["rng_seed"] == 3
