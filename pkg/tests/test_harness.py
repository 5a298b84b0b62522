"""Tests for building, executing, metering and profiling programs."""

import asyncio
import shutil

import pytest

from conftest import make_input, make_solution
from src.harness.executor import Harness
from src.harness.meters import HardwareCounterMeter, TraceCounterMeter, measure_cost, parse_perf_stat
from src.harness.models import ArtifactKind, ExecutionLimits, ExitKind, MeterKind
from src.harness.profiles import collect_line_profile, normalize_hits, parse_gcov_text
from src.harness.toolchains import ToolchainRegistry, expand
from src.pipeline.errors import (
    BuildFailed,
    ConfigError,
    InputTooLarge,
    MeterUnavailable,
    ProfileUnavailable,
    UnsupportedLanguage,
)


async def build_fixture(harness: Harness, fixture_source, name: str, profiling: bool = False):
    solution = make_solution(name.replace(".py", ""), fixture_source(name))
    return await harness.build(solution, profiling=profiling)


class TestToolchains:

    def test_default_file_has_all_languages(self, toolchains):
        for tag in ("cpp", "c", "python3"):
            assert tag in toolchains

    def test_expand_substitutes_placeholders(self):
        assert expand("g++ -O2 -o {out} {src}", out="/b/x", src="/b/x.cpp") == [
            "g++", "-O2", "-o", "/b/x", "/b/x.cpp",
        ]

    def test_expand_rejects_unknown_placeholder(self):
        with pytest.raises(ConfigError):
            expand("cc {nowhere}")

    def test_unknown_language(self, toolchains):
        with pytest.raises(UnsupportedLanguage):
            toolchains.get("rust")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ToolchainRegistry.from_file(tmp_path / "missing.toml")


class TestExecute:

    @pytest.mark.asyncio
    async def test_echo_round_trips_stdin(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "echo.py")

        result = await harness.execute(artifact, make_input("t1", "3\n1 2 3\n"))

        assert result.exit.kind == ExitKind.OK
        assert result.stdout == b"3\n1 2 3\n"
        assert result.checker_hits == frozenset()

    @pytest.mark.asyncio
    async def test_rebuild_of_same_source_is_cached(self, harness, fixture_source):
        first = await build_fixture(harness, fixture_source, "echo.py")
        second = await build_fixture(harness, fixture_source, "echo.py")

        assert first.entry == second.entry
        assert first.build_log == second.build_log

    @pytest.mark.asyncio
    async def test_timeout_is_classified(self, tmp_path, toolchains, fixture_source):
        harness = Harness(toolchains, tmp_path / "work", ExecutionLimits(wall_timeout=0.5))
        artifact = await build_fixture(harness, fixture_source, "loop_forever.py")

        result = await harness.execute(artifact, make_input("t1", "1\n"))

        assert result.exit.kind == ExitKind.TIMEOUT
        assert result.wall_time < 10

    @pytest.mark.asyncio
    async def test_legacy_warning_with_abort_is_constraint_abort(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "legacy_abort.py")

        result = await harness.execute(artifact, make_input("t1", "1\n"))

        assert result.exit.kind == ExitKind.CONSTRAINT_ABORT
        assert result.checker_hits == frozenset({"legacy"})

    @pytest.mark.asyncio
    async def test_checker_hit_without_abort_exits_normally(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "checked_n_large.py")

        result = await harness.execute(artifact, make_input("t1", "95\n"))

        assert result.exit.kind == ExitKind.OK
        assert result.stdout.strip() == b"95"
        assert result.checker_hits == frozenset({"n_large"})

    @pytest.mark.asyncio
    async def test_checker_abort_when_enabled(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "checked_n_large.py")

        result = await harness.execute(artifact, make_input("t1", "95\n"), env={"WEDGE_ABORT": "1"})

        assert result.exit.kind == ExitKind.CONSTRAINT_ABORT

    @pytest.mark.asyncio
    async def test_concurrent_runs_are_isolated(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "scratch_marker.py")
        tokens = [f"tok{i}" for i in range(12)]

        results = await asyncio.gather(*(
            harness.execute(artifact, make_input(t, t), env={"WEDGE_ABORT": "1"} if i % 2 else None)
            for i, t in enumerate(tokens)
        ))

        for i, (token, result) in enumerate(zip(tokens, results)):
            assert result.exit.kind == ExitKind.OK
            assert result.stdout.decode().split() == [token, "fresh", "1" if i % 2 else "-"]
        assert list((harness.work_dir / "scratch").iterdir()) == []

    @pytest.mark.asyncio
    async def test_nonzero_exit(self, harness):
        artifact = await harness.build(make_solution("exit3", "import sys\nsys.exit(3)\n"))

        result = await harness.execute(artifact, make_input("t1", "1\n"))

        assert result.exit.kind == ExitKind.NONZERO
        assert result.exit.code == 3

    @pytest.mark.asyncio
    async def test_input_over_limit_is_rejected(self, tmp_path, toolchains, fixture_source):
        harness = Harness(toolchains, tmp_path / "work", ExecutionLimits(max_input_bytes=4))
        artifact = await build_fixture(harness, fixture_source, "echo.py")

        with pytest.raises(InputTooLarge):
            await harness.execute(artifact, make_input("big", "123456789\n"))

    @pytest.mark.asyncio
    async def test_syntax_error_fails_build(self, harness):
        with pytest.raises(BuildFailed) as excinfo:
            await harness.build(make_solution("broken", "def f(:\n    pass\n"))
        assert "SyntaxError" in excinfo.value.log


class TestMeters:

    @pytest.mark.asyncio
    async def test_trace_counter_reads_final_line(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "cost_1234.py")

        measurement = await measure_cost(harness, TraceCounterMeter(), artifact, make_input("t1", "1\n"), runs=3)

        assert measurement.per_run_costs == [1234, 1234, 1234]
        assert measurement.mean_cost == 1234
        assert measurement.meter == MeterKind.TRACE_COUNTER

    @pytest.mark.asyncio
    async def test_trace_counter_without_cost_line(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "echo.py")

        with pytest.raises(MeterUnavailable):
            await measure_cost(harness, TraceCounterMeter(), artifact, make_input("t1", "1\n"), runs=1)

    @pytest.mark.asyncio
    async def test_toy_solution_costs_match_step_counts(self, harness, toy_problem):
        artifact = await harness.build(toy_problem.get_solution("dup_bucket"))

        measurement = await measure_cost(
            harness, TraceCounterMeter(), artifact, toy_problem.get_test("t02"), runs=2
        )

        assert measurement.per_run_costs == [36, 36]

    def test_hardware_meter_needs_perf(self):
        meter = HardwareCounterMeter(perf_binary="wedge-no-such-perf")

        with pytest.raises(MeterUnavailable):
            meter.check_available()

    def test_parse_perf_stat(self):
        text = "# started on Mon\n\n123456,,instructions:u,1000,100.00,,\n"

        assert parse_perf_stat(text, "instructions") == 123456
        assert parse_perf_stat("<not counted>,,instructions,0,0.00,,\n", "instructions") is None
        assert parse_perf_stat(text, "cycles") is None


class TestLineProfiles:

    @pytest.mark.asyncio
    async def test_straight_line_program(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "straight3.py", profiling=True)

        profile = await collect_line_profile(harness, artifact, make_input("t1", "\n"))

        assert profile.hits == {1: 1, 2: 1, 3: 1}
        assert profile.solution_id == "straight3"

    @pytest.mark.asyncio
    async def test_loop_body_counts(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "loop7.py", profiling=True)

        profile = await collect_line_profile(harness, artifact, make_input("t1", "x\n"))

        assert profile.hits[1] == 1
        assert profile.hits[5] == 7
        assert set(profile.hits) == set(range(1, 7))

    @pytest.mark.asyncio
    async def test_release_build_has_no_profile(self, harness, fixture_source):
        artifact = await build_fixture(harness, fixture_source, "straight3.py")

        with pytest.raises(ProfileUnavailable):
            await collect_line_profile(harness, artifact, make_input("t1", "\n"))

    def test_normalize_fills_missing_lines(self):
        assert normalize_hits({2: 5}, 3) == {1: 0, 2: 5, 3: 0}

    def test_parse_gcov_text(self):
        text = (
            "        -:    0:Source:a.cpp\n"
            "        -:    1:#include <cstdio>\n"
            "        1:    2:int main() {\n"
            "    #####:    3:  never();\n"
            "       10*:   4:  loop();\n"
        )

        assert parse_gcov_text(text) == {1: 0, 2: 1, 3: 0, 4: 10}


SUM_LOOP_CPP = """#include <cstdio>
int main() {
    int n = 0;
    if (scanf("%d", &n) != 1) return 1;
    long long total = 0;
    for (int i = 0; i < n; i++) {
        total += i;
    }
    printf("%lld\\n", total);
    return 0;
}
"""

needs_gpp = pytest.mark.skipif(shutil.which("g++") is None, reason="g++ not installed")


@needs_gpp
class TestNativeBuilds:

    @pytest.mark.asyncio
    async def test_build_and_run(self, harness):
        artifact = await harness.build(make_solution("sum_loop", SUM_LOOP_CPP, language="cpp"))

        result = await harness.execute(artifact, make_input("t1", "5\n"))

        assert artifact.kind == ArtifactKind.NATIVE_BINARY
        assert result.exit.kind == ExitKind.OK
        assert result.stdout == b"10\n"

    @pytest.mark.asyncio
    async def test_compile_error(self, harness):
        with pytest.raises(BuildFailed):
            await harness.build(make_solution("broken", "int main( {", language="cpp"))

    @pytest.mark.skipif(shutil.which("gcov") is None, reason="gcov not installed")
    @pytest.mark.asyncio
    async def test_gcov_loop_counts(self, harness):
        artifact = await harness.build(make_solution("sum_loop", SUM_LOOP_CPP, language="cpp"), profiling=True)

        profile = await collect_line_profile(harness, artifact, make_input("t1", "7\n"))

        assert profile.hits[7] == 7
        assert profile.hits[1] == 0

    @pytest.mark.asyncio
    async def test_missing_gcov(self, harness, mocker):
        artifact = await harness.build(make_solution("sum_loop", SUM_LOOP_CPP, language="cpp"), profiling=True)
        mocker.patch("src.harness.profiles.shutil.which", return_value=None)

        with pytest.raises(ProfileUnavailable):
            await collect_line_profile(harness, artifact, make_input("t1", "3\n"))
