"""Tests for duration and budget parsing."""

import pytest

from src.utils.durations import format_duration, parse_budget, parse_duration


class TestParseDuration:

    def test_units(self):
        assert parse_duration("500ms") == pytest.approx(0.5)
        assert parse_duration("30s") == 30
        assert parse_duration("5m") == 300
        assert parse_duration("1h") == 3600
        assert parse_duration("2d") == 172800

    def test_bare_number_is_seconds(self):
        assert parse_duration("90") == 90
        assert parse_duration(" 1.5 ") == 1.5

    def test_invalid(self):
        with pytest.raises(ValueError):
            parse_duration("1w")
        with pytest.raises(ValueError):
            parse_duration("soon")


class TestParseBudget:

    def test_execution_budgets(self):
        assert parse_budget("2000execs") == (None, 2000)
        assert parse_budget("2000x") == (None, 2000)
        assert parse_budget("1exec") == (None, 1)

    def test_duration_budgets(self):
        assert parse_budget("90s") == (90, None)
        assert parse_budget("1h") == (3600, None)

    def test_fractional_exec_count(self):
        with pytest.raises(ValueError):
            parse_budget("1.5execs")


def test_format_duration():
    assert format_duration(0.85) == "850ms"
    assert format_duration(45) == "45.0s"
    assert format_duration(150) == "2m 30s"
    assert format_duration(9000) == "2h 30m"
