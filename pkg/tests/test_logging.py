"""Tests for structured log output and the log analyzer."""

import json
import logging

from analyze_logs import analyze_log_file, summarize_entries
from src.pipeline.logger import JSONFormatter, TextFormatter


def record(message: str, level: int = logging.INFO, **extra) -> logging.LogRecord:
    entry = logging.LogRecord("src.fuzzer.campaign", level, __file__, 1, message, None, None)
    entry.__dict__.update(extra)
    return entry


def test_json_formatter_copies_context_fields():
    line = JSONFormatter().format(record("🎯 Fuzzing s1", stage="fuzz", solution_id="s1", unrelated="x"))

    data = json.loads(line)
    assert data["message"] == "🎯 Fuzzing s1"
    assert data["level"] == "INFO"
    assert (data["stage"], data["solution_id"]) == ("fuzz", "s1")
    assert "unrelated" not in data
    assert data["timestamp"].endswith("Z")


def test_text_formatter_appends_context():
    text = TextFormatter(use_color=False).format(record("built", solution_id="s1", duration_ms=12.4))

    assert "[INFO] built" in text
    assert "solution_id=s1" in text
    assert "took 12ms" in text


def test_summarize_entries():
    lines = [
        json.dumps({"level": "INFO", "message": "✅ Stage ingest completed", "stage": "ingest"}),
        json.dumps({"level": "ERROR", "message": "❌ constraints failed for s2: no fixture", "stage": "constraints"}),
        json.dumps({"level": "WARNING", "message": "⚠️ Mutator plugin for s1 crashed (x); "
                    "continuing with the builtin mutator", "solution_id": "s1"}),
        json.dumps({"level": "INFO", "message": "✅ Campaign s1: 60 execs", "stage": "fuzz"}),
        "not json",
        "",
    ]

    summary = summarize_entries(lines)

    assert summary["entries"] == 4
    assert summary["completed_stages"] == ["ingest"]
    assert summary["failed_solutions"]["constraints"] == ["s2"]
    assert summary["mutator_fallbacks"] == ["s1"]
    assert summary["campaigns"] == 1
    assert [n for n, _ in summary["invalid_lines"]] == [5]


def test_analyze_log_file(tmp_path, capsys):
    log = tmp_path / "wedge_20261017.log"
    log.write_text(json.dumps({"level": "INFO", "message": "✅ Stage profile completed", "stage": "profile"}) + "\n")

    summary = analyze_log_file(log)

    assert summary["completed_stages"] == ["profile"]
    assert "No obvious issues detected" in capsys.readouterr().out
