"""Tests for layered configuration."""

import pytest

from conftest import TOY_CORPUS
from src.pipeline.config import Config
from src.pipeline.errors import ConfigError


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("WEDGE_TOP_K", "WEDGE_JOBS", "WEDGE_LOG_FORMAT", "WEDGE_CONSISTENCY_THRESHOLD"):
        monkeypatch.delenv(name, raising=False)


def write_toml(tmp_path, text: str):
    path = tmp_path / "wedge.toml"
    path.write_text(text)
    return str(path)


class TestPrecedence:

    def test_defaults(self):
        config = Config.load()

        assert config.filter.top_k == 10
        assert config.filter.consistency_threshold == 0.95
        assert config.fuzz.energy == 32
        assert config.mutation.max_rounds == 5

    def test_environment_feeds_defaults(self, monkeypatch):
        monkeypatch.setenv("WEDGE_TOP_K", "7")

        assert Config.load().filter.top_k == 7

    def test_flags_beat_environment(self, monkeypatch):
        monkeypatch.setenv("WEDGE_TOP_K", "7")

        config = Config.load(overrides={"filter": {"top_k": 3}, "run": {"jobs": None}})

        assert config.filter.top_k == 3
        assert config.run.jobs >= 1

    def test_file_beats_flags(self, tmp_path):
        path = write_toml(tmp_path, "[filter]\ntop_k = 12\n")

        config = Config.load(path, overrides={"filter": {"top_k": 3}, "run": {"jobs": 2}})

        assert config.filter.top_k == 12
        assert config.run.jobs == 2

    def test_snapshot_is_the_starting_point(self):
        stored = Config.load(overrides={"fuzz": {"energy": 8}}).snapshot()

        config = Config.load(snapshot=stored)

        assert config.fuzz.energy == 8
        assert config.snapshot() == stored

    def test_toy_corpus_settings(self):
        config = Config.load(str(TOY_CORPUS / "wedge.toml"))

        assert config.corpus.min_solutions == 3
        assert config.fuzz.max_execs == 2000


class TestInvalid:

    def test_unknown_section(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown configuration section"):
            Config.load(write_toml(tmp_path, "[bogus]\nx = 1\n"))

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown keys in \\[filter\\]"):
            Config.load(overrides={"filter": {"top": 1}})

    def test_out_of_range_value(self, tmp_path):
        with pytest.raises(ConfigError):
            Config.load(write_toml(tmp_path, "[filter]\nconsistency_threshold = 2.0\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config file not found"):
            Config.load(str(tmp_path / "absent.toml"))

    def test_bad_log_format(self):
        with pytest.raises(ConfigError, match="log.format"):
            Config.load(overrides={"log": {"format": "yaml"}})

    def test_missing_toolchain_file(self, tmp_path):
        with pytest.raises(ConfigError, match="toolchain file not found"):
            Config.load(overrides={"harness": {"toolchains": str(tmp_path / "none.toml")}})

    def test_mutator_rounds_capped(self):
        with pytest.raises(ConfigError):
            Config.load(overrides={"mutation": {"max_rounds": 6}})
