"""
Prompt rendering.

Templates live in ``templates/`` as ``string.Template`` text so that C and
C++ braces need no escaping. Rendering is a pure function of its inputs.
"""

from functools import lru_cache
from pathlib import Path
from string import Template
from typing import List, Optional, Sequence

from ..corpus.models import Problem, Solution, TestInput
from ..pairminer.miner import DEFAULT_PREVIEW_BYTES, ProfileDiff, preview
from .parsing import NLInvariant
from .providers import prompt_header

TEMPLATE_DIR = Path(__file__).parent / "templates"

LANGUAGE_NAMES = {"cpp": "C++", "c": "C", "python3": "Python"}
FENCE_TAGS = {"cpp": "cpp", "c": "c", "python3": "python"}

CHECKER_TEMPLATES = {
    "cpp": (
        "if (/* condition based on the invariant */) {\n"
        '    cerr << "WEDGE_CHECK_HIT:<checker_id>" << endl;\n'
        "    abort();\n"
        "}"
    ),
    "c": (
        "if (/* condition based on the invariant */) {\n"
        '    fprintf(stderr, "WEDGE_CHECK_HIT:<checker_id>\\n");\n'
        "    abort();\n"
        "}"
    ),
    "python3": (
        "if condition_based_on_the_invariant:\n"
        '    print("WEDGE_CHECK_HIT:<checker_id>", file=sys.stderr)\n'
        "    os.abort()"
    ),
}
ABORT_CALLS = {"cpp": "abort()", "c": "abort()", "python3": "os.abort()"}

MAX_REFERENCE_INPUTS = 3


@lru_cache(maxsize=None)
def load_template(name: str) -> Template:
    """Read a template asset."""
    return Template((TEMPLATE_DIR / name).read_text(encoding="utf-8"))


def example_mutator() -> str:
    """Source of the example mutator shown to the provider."""
    return (TEMPLATE_DIR / "example_mutator.py").read_text(encoding="utf-8").rstrip("\n")


def few_shot_invariants() -> str:
    return (TEMPLATE_DIR / "few_shot_invariants.txt").read_text(encoding="utf-8").rstrip("\n")


def _language(solution: Solution) -> str:
    return LANGUAGE_NAMES.get(solution.language, solution.language)


def format_invariants(invariants: Sequence[NLInvariant]) -> str:
    """Invariants as ``inv_k: text`` lines."""
    return "\n".join(f"{inv.id}: {inv.text}" for inv in invariants)


def format_reference_inputs(seeds: Sequence[TestInput], budget: int = DEFAULT_PREVIEW_BYTES) -> str:
    """Up to three seed inputs as fenced previews."""
    parts = []
    for i, seed in enumerate(list(seeds)[:MAX_REFERENCE_INPUTS], start=1):
        parts.append(f"Input {i}:\n```\n{preview(seed.input_bytes, budget)}\n```")
    return "\n\n".join(parts)


def render_reasoning_prompt(problem: Problem, solution: Solution, diff: ProfileDiff) -> str:
    """
    Render the constraint reasoning prompt.

    Args:
        problem: Problem owning the solution
        solution: Solution being analyzed
        diff: Aligned slow/fast hit counts with input previews

    Returns:
        Prompt text
    """
    return load_template("reasoning.txt").substitute(
        header=prompt_header("reason", problem.id, solution.id),
        language=_language(solution),
        fence=FENCE_TAGS.get(solution.language, ""),
        examples=few_shot_invariants(),
        statement=problem.statement.strip(),
        program=solution.source.rstrip("\n"),
        slow_input=diff.slow_input_preview.rstrip("\n"),
        fast_input=diff.fast_input_preview.rstrip("\n"),
        hit_counts=diff.render(),
    )


def render_checker_prompt(problem: Problem, solution: Solution, invariants: Sequence[NLInvariant]) -> str:
    """Render the checker implementation and insertion prompt."""
    return load_template("checker.txt").substitute(
        header=prompt_header("checker", problem.id, solution.id),
        language=_language(solution),
        fence=FENCE_TAGS.get(solution.language, ""),
        invariants=format_invariants(invariants),
        checker_template=CHECKER_TEMPLATES.get(solution.language, CHECKER_TEMPLATES["cpp"]),
        abort_call=ABORT_CALLS.get(solution.language, "abort()"),
        statement=problem.statement.strip(),
        program=solution.source.rstrip("\n"),
    )


def render_repair_prompt(task: str, problem_id: str, solution_id: str, failure: str) -> str:
    """Follow-up prompt carrying the failure of the previous answer."""
    return load_template("repair.txt").substitute(
        header=prompt_header(task, problem_id, solution_id),
        failure=failure.strip(),
    )


def render_mutator_prompt(
    problem: Problem,
    solution: Solution,
    invariants: Sequence[NLInvariant],
    diff: Optional[ProfileDiff],
    seeds: Sequence[TestInput],
    checker_code: Optional[List[str]] = None,
) -> str:
    """
    Render the mutator synthesis prompt.

    An empty invariant list omits the constraints section entirely, which
    gives the constraint-agnostic mutator.

    Args:
        problem: Problem statement source
        solution: Solution the constraints were derived on
        invariants: Natural-language constraints (may be empty)
        diff: Profile diff shown as context
        seeds: Reference inputs
        checker_code: Checker snippets appended to the constraints summary

    Returns:
        Prompt text
    """
    constraints_section = "\n"
    if invariants:
        summary = format_invariants(invariants)
        if checker_code:
            summary += "\n\n" + "\n\n".join(code.rstrip("\n") for code in checker_code)
        constraints_section = load_template("constraints_section.txt").substitute(constraints=summary)

    fence = FENCE_TAGS.get(solution.language, "")
    profile_context = f"```{fence}\n{solution.source.rstrip()}\n```"
    if diff is not None:
        profile_context += f"\n\nHit counts (slow vs fast):\n```\n{diff.render()}\n```"

    return load_template("mutator.txt").substitute(
        header=prompt_header("mutator", problem.id, solution.id),
        mutator_example=example_mutator(),
        statement=problem.statement.strip(),
        reference_inputs=format_reference_inputs(seeds),
        constraints_section=constraints_section,
        profile_context=profile_context,
    )


def render_validator_prompt(problem: Problem) -> str:
    """Render the input validator prompt."""
    return load_template("validator.txt").substitute(
        header=prompt_header("validator", problem.id, ""),
        statement=problem.statement.strip(),
        reference_inputs=format_reference_inputs(problem.official_tests),
    )


def render_direct_prompt(problem: Problem, number_of_tests: int, output_directory: str = "tests") -> str:
    """Render the direct test-generator prompt."""
    return load_template("direct_prompt.txt").substitute(
        header=prompt_header("direct", problem.id, ""),
        statement=problem.statement.strip(),
        number_of_tests=number_of_tests,
        output_directory=output_directory,
    )
