"""Tests for invariant parsing, checker instrumentation and constraint reasoning."""

import pytest

from conftest import OFFLINE_DIR, make_input, make_solution, write_offline_fixture
from src.constraints.instrument import (
    gate_aborts,
    implement_checkers,
    parse_checker_response,
    validate_instrumentation,
)
from src.constraints.parsing import (
    InvariantCategory,
    NLInvariant,
    categorize,
    checker_blocks,
    code_block,
    copies_slow_input,
    instrumented_block,
    parse_invariants,
)
from src.constraints.prompts import render_mutator_prompt, render_reasoning_prompt
from src.constraints.providers import Conversation, create_provider, prompt_header
from src.constraints.reasoner import derive_constraints, load_constraint_result, reason_constraints
from src.harness.models import LineProfile
from src.pairminer.miner import ContrastivePair, build_profile_diff
from src.pairminer.similarity import SimilarityScore
from src.pipeline.errors import (
    BuildFailed,
    ConfigError,
    OutputDivergence,
    ProviderError,
    UnparseableResponse,
)

N_PROGRAM = "import sys\nn = int(sys.stdin.read().split()[0])\nprint(n)\n"
N_INVARIANTS = [NLInvariant(id="inv_1", text="n is close to its upper limit")]

GOOD_CHECKER = '''```checker:inv_1
if n >= 90:
    print("WEDGE_CHECK_HIT:n_large", file=sys.stderr)
```

```instrumented
import sys
n = int(sys.stdin.read().split()[0])
if n >= 90:
    print("WEDGE_CHECK_HIT:n_large", file=sys.stderr)
print(n)
```
'''

BROKEN_CHECKER = GOOD_CHECKER.replace("if n >= 90:\n    print", "if n >= 90\n    print")


def dup_pair() -> ContrastivePair:
    return ContrastivePair(
        slow="t02",
        fast="t01",
        similarity=SimilarityScore(match_ratio=2 / 9, jaccard=0.25),
        cost_ratio=4.5,
        slow_cost=36,
        fast_cost=8,
    )


def dup_diff(problem):
    solution = problem.get_solution("dup_bucket")
    lines = len(solution.source.splitlines())
    slow = LineProfile(solution_id="dup_bucket", input_id="t02", hits={i: 1 for i in range(1, lines + 1)})
    fast = LineProfile(solution_id="dup_bucket", input_id="t01", hits={i: 1 for i in range(1, lines + 1)})
    return build_profile_diff(solution.source, slow, fast, problem.get_test("t02"), problem.get_test("t01"))


def offline(directory) -> Conversation:
    return Conversation(create_provider(f"offline:{directory}"))


class TestParseInvariants:

    def test_numbered_list_under_heading(self):
        response = (
            "Some analysis first.\n\n"
            "PERFORMANCE INVARIANTS:\n"
            "1. When n is close to its upper limit the nested loop dominates.\n"
            "2. When many values are repeated the bucket scan grows.\n"
            "3. When a and b are close and neither divides c the search is long.\n"
        )

        invariants = parse_invariants(response)

        assert [inv.id for inv in invariants] == ["inv_1", "inv_2", "inv_3"]
        assert invariants[1].text == "When many values are repeated the bucket scan grows."

    def test_code_fences_only(self):
        assert parse_invariants("```python\n1. not an invariant\n```\n") == []

    def test_bullets_among_prose(self):
        response = (
            "The slow input is long.\n"
            "- Large n makes the loop slow.\n"
            "Some more prose here.\n"
            "* Repeated values trigger the\n"
            "  quadratic scan.\n"
        )

        texts = [inv.text for inv in parse_invariants(response)]

        assert texts == ["Large n makes the loop slow.", "Repeated values trigger the quadratic scan."]

    def test_categories(self):
        assert categorize("n is close to its upper limit") == InvariantCategory.SIZE_BOUND
        assert categorize("the array contains repeated values") == InvariantCategory.STRUCTURAL_PATTERN
        assert categorize("a divides c") == InvariantCategory.VALUE_RELATION
        assert categorize("something odd happens") == InvariantCategory.OTHER

    def test_literal_copy_detection(self):
        assert copies_slow_input("happens for 8 1 1 1 exactly", b"8\n1 1 1\n")
        assert not copies_slow_input("happens for 8 1", b"8 1\n")

    def test_fenced_blocks(self):
        assert checker_blocks(GOOD_CHECKER)[0][0] == ["inv_1"]
        assert instrumented_block(GOOD_CHECKER).startswith("import sys")
        assert code_block("```\nx = 1\n```\n") == "x = 1\n"


class TestCheckerResponse:

    def test_fixture_response(self, toy_problem):
        response = (OFFLINE_DIR / "checker_dup_bucket.txt").read_text()
        invariants = [NLInvariant(id="inv_1", text="dups"), NLInvariant(id="inv_2", text="n large")]

        specs, program = parse_checker_response(response, invariants, toy_problem.get_solution("dup_bucket"))

        assert [s.checker_id for s in specs] == ["dup_heavy", "n_large"]
        assert program.checker_ids == frozenset({"dup_heavy", "n_large"})
        assert 'os.environ.get("WEDGE_ABORT") == "1"' in program.source

    def test_uncovered_invariant(self):
        invariants = N_INVARIANTS + [NLInvariant(id="inv_2", text="other")]

        with pytest.raises(UnparseableResponse):
            parse_checker_response(GOOD_CHECKER, invariants, make_solution("s", N_PROGRAM))

    def test_orphan_blocks_are_dropped(self):
        response = GOOD_CHECKER + '\n```checker:inv_9\nprint("WEDGE_CHECK_HIT:ghost")\n```\n'

        specs, program = parse_checker_response(response, N_INVARIANTS, make_solution("s", N_PROGRAM))

        assert [s.checker_id for s in specs] == ["n_large"]

    def test_missing_instrumented_block(self):
        with pytest.raises(UnparseableResponse):
            parse_checker_response("```checker:inv_1\nx\n```\n", N_INVARIANTS, make_solution("s", N_PROGRAM))

    def test_python_abort_gating_adds_import(self):
        gated = gate_aborts("import sys\nif bad:\n    os.abort()\n", "python3")

        assert gated.startswith("import os\n")
        assert '(os.abort() if os.environ.get("WEDGE_ABORT") == "1" else None)' in gated

    def test_cpp_abort_gating(self):
        gated = gate_aborts('int main() { if (x) { cerr << "WEDGE_CHECK_HIT:c1"; abort(); } }', "cpp")

        assert gated.startswith("#include <cstdlib>\n")
        assert 'std::getenv("WEDGE_ABORT")' in gated

    def test_already_gated_source_is_unchanged(self):
        source = 'if (getenv("WEDGE_ABORT")) abort();'

        assert gate_aborts(source, "c") == source


class TestOfflineProvider:

    @pytest.mark.asyncio
    async def test_replies_follow_task_turns(self, tmp_path):
        directory = write_offline_fixture(
            tmp_path / "offline",
            [{"task": "mutator", "responses": ["first.txt", "second.txt"]}],
            {"first.txt": "one", "second.txt": "two"},
        )
        conversation = offline(directory)

        assert await conversation.ask(prompt_header("mutator", "p", "s")) == "one"
        assert await conversation.ask(prompt_header("mutator", "p", "s")) == "two"
        assert await conversation.ask(prompt_header("mutator", "p", "s")) == "two"
        assert conversation.rounds == 3

    @pytest.mark.asyncio
    async def test_unmatched_prompt(self, tmp_path):
        directory = write_offline_fixture(tmp_path / "offline", [], {})

        with pytest.raises(ProviderError):
            await offline(directory).ask(prompt_header("reason", "p", "s"))
        with pytest.raises(ProviderError):
            await offline(directory).ask("no header at all")

    def test_bad_selector(self):
        with pytest.raises(ConfigError):
            create_provider("carrier-pigeon:home")
        with pytest.raises(ConfigError):
            create_provider("offline")


class TestPrompts:

    def test_reasoning_prompt_carries_header_and_counts(self, toy_problem):
        diff = dup_diff(toy_problem)

        prompt = render_reasoning_prompt(toy_problem, toy_problem.get_solution("dup_bucket"), diff)

        assert prompt.startswith("[wedge] task=reason problem=toy_dup solution=dup_bucket")
        assert diff.render() in prompt

    def test_mutator_prompt_without_invariants_omits_constraints(self, toy_problem):
        solution = toy_problem.get_solution("dup_bucket")

        with_constraints = render_mutator_prompt(toy_problem, solution, N_INVARIANTS, None, toy_problem.default_tests)
        without = render_mutator_prompt(toy_problem, solution, [], None, toy_problem.default_tests)

        assert "Constraints summary begins" in with_constraints
        assert "Constraints summary begins" not in without


class TestReasoning:

    @pytest.mark.asyncio
    async def test_fixture_gives_two_invariants(self, toy_problem):
        solution = toy_problem.get_solution("dup_bucket")

        invariants = await reason_constraints(
            offline(OFFLINE_DIR), toy_problem, solution, dup_pair(), dup_diff(toy_problem)
        )

        assert [inv.id for inv in invariants] == ["inv_1", "inv_2"]
        assert invariants[1].category == InvariantCategory.SIZE_BOUND

    @pytest.mark.asyncio
    async def test_prose_twice_is_unparseable(self, tmp_path, toy_problem):
        directory = write_offline_fixture(
            tmp_path / "offline",
            [{"task": "reason", "responses": ["prose.txt"]}],
            {"prose.txt": "The program is slow on big inputs, nothing more to say.\n"},
        )
        conversation = offline(directory)

        with pytest.raises(UnparseableResponse):
            await reason_constraints(
                conversation, toy_problem, toy_problem.get_solution("dup_bucket"), dup_pair(), dup_diff(toy_problem)
            )
        assert conversation.rounds == 2


class TestImplementCheckers:

    @pytest.mark.asyncio
    async def test_one_build_repair(self, tmp_path, harness, toy_problem):
        directory = write_offline_fixture(
            tmp_path / "offline",
            [{"task": "checker", "responses": ["bad.txt", "good.txt"]}],
            {"bad.txt": BROKEN_CHECKER, "good.txt": GOOD_CHECKER},
        )
        conversation = offline(directory)

        specs, program, artifact = await implement_checkers(
            conversation, harness, toy_problem, N_INVARIANTS, make_solution("nprog", N_PROGRAM)
        )

        assert conversation.rounds == 2
        assert program.checker_ids == frozenset({"n_large"})
        result = await harness.execute(artifact, make_input("t", "95\n"))
        assert result.checker_hits == frozenset({"n_large"})

    @pytest.mark.asyncio
    async def test_two_build_failures(self, tmp_path, harness, toy_problem):
        directory = write_offline_fixture(
            tmp_path / "offline",
            [{"task": "checker", "responses": ["bad.txt"]}],
            {"bad.txt": BROKEN_CHECKER},
        )

        with pytest.raises(BuildFailed) as excinfo:
            await implement_checkers(
                offline(directory), harness, toy_problem, N_INVARIANTS, make_solution("nprog", N_PROGRAM)
            )
        assert len(excinfo.value.logs) == 2


class TestValidateInstrumentation:

    @pytest.mark.asyncio
    async def test_stderr_checker_keeps_output(self, harness):
        original = await harness.build(make_solution("nprog", N_PROGRAM))
        instrumented = await harness.build_source("nprog", "python3", instrumented_block(GOOD_CHECKER),
                                                  variant="instrumented")
        tests = [make_input("small", "3\n"), make_input("big", "95\n")]
        pair = ContrastivePair(slow="big", fast="small", similarity=SimilarityScore(match_ratio=0, jaccard=0),
                               cost_ratio=2.0)

        report = await validate_instrumentation(harness, instrumented, original, tests, pair)

        assert report.tests_checked == 2
        assert report.hits_per_test == {"small": [], "big": ["n_large"]}
        assert report.pair_discriminating is True

    @pytest.mark.asyncio
    async def test_stdout_checker_diverges(self, harness):
        original = await harness.build(make_solution("nprog", N_PROGRAM))
        noisy = N_PROGRAM.replace("print(n)", 'print("checked")\nprint(n)')
        instrumented = await harness.build_source("nprog", "python3", noisy, variant="instrumented")

        with pytest.raises(OutputDivergence):
            await validate_instrumentation(harness, instrumented, original, [make_input("t", "3\n")])


@pytest.mark.asyncio
async def test_derive_constraints_writes_artifacts(tmp_path, harness, toy_problem):
    solution = toy_problem.get_solution("dup_bucket")
    out = tmp_path / "constraints" / "dup_bucket"

    result = await derive_constraints(
        offline(OFFLINE_DIR), harness, toy_problem, solution, dup_pair(), dup_diff(toy_problem), out
    )

    assert len(result.invariants) == 2
    assert result.validation.slow_hits == ["dup_heavy"]
    assert result.validation.fast_hits == []
    assert result.validation.pair_discriminating
    for name in ("invariants.json", "checkers.json", "validation.json", "instrumented.py",
                 "prompt_1.txt", "response_2.txt"):
        assert (out / name).is_file()

    reloaded = load_constraint_result(out, "dup_bucket")
    assert reloaded.instrumented.checker_ids == frozenset({"dup_heavy", "n_large"})
    assert reloaded.invariants == result.invariants
