"""
Diagnostic tool to check why a corpus or machine is not ready for a run.

This will show:
1. Which language toolchains have their compilers/interpreters on PATH
2. Whether gcov, perf and afl-fuzz are available
3. The effective configuration
4. Which problems of a corpus pass the count filters (when a corpus is given)
"""

import shlex
import shutil
import sys
from datetime import datetime

from dotenv import load_dotenv

# Load environment
load_dotenv()

from src.corpus.loader import load_corpus
from src.harness.toolchains import ToolchainRegistry
from src.pipeline.config import Config
from src.pipeline.errors import WedgeError
from src.pipeline.logger import get_logger

logger = get_logger(__name__)

EXTERNAL_TOOLS = {
    "gcov": "line profiles of native solutions",
    "perf": "hardware_counter meter",
    "afl-fuzz": "running export-aflpp bundles",
}


def check_toolchains(config: Config) -> bool:
    """Report whether each toolchain's first build and run programs exist."""
    print(f"Toolchains ({config.harness.toolchains}):")
    try:
        registry = ToolchainRegistry.from_file(config.harness.toolchains)
    except WedgeError as e:
        print(f"  ❌ {e}")
        return False

    ready = True
    for tag, toolchain in sorted(registry.toolchains.items()):
        programs = {shlex.split(t)[0] for t in toolchain.build if t.strip()}
        programs.add(shlex.split(toolchain.run)[0])
        missing = sorted(p for p in programs if not p.startswith("{") and shutil.which(p) is None)
        if missing:
            ready = False
            print(f"  ❌ {tag}: missing {', '.join(missing)}")
        else:
            print(f"  ✅ {tag} ({toolchain.kind.value})")
    return ready


def check_tools() -> None:
    print("External tools:")
    for tool, purpose in EXTERNAL_TOOLS.items():
        mark = "✅" if shutil.which(tool) else "⚠️ "
        print(f"  {mark} {tool:<9} {purpose}")


def diagnose_corpus(root: str, config: Config) -> None:
    """Report each problem's solution and test counts against the filters."""
    try:
        corpus = load_corpus(root)
    except WedgeError as e:
        print(f"❌ Cannot load corpus: {e}")
        return

    cfg = config.corpus
    eligible = 0
    print(f"\nCorpus {root}: {len(corpus.problems)} problems")
    print("-" * 40)
    for problem_id, problem in sorted(corpus.problems.items()):
        correct = len(problem.correct_solutions)
        tests = len(problem.default_tests)
        reasons = []
        if correct < cfg.min_solutions:
            reasons.append(f"{correct} < {cfg.min_solutions} correct solutions")
        if tests < cfg.min_tests:
            reasons.append(f"{tests} < {cfg.min_tests} default tests")
        if reasons:
            print(f"  ❌ {problem_id}: {'; '.join(reasons)}")
        else:
            eligible += 1
            print(f"  ✅ {problem_id}: {correct} solutions, {tests} tests, "
                  f"languages {', '.join(sorted(problem.languages_present))}")
    print(f"\n{eligible}/{len(corpus.problems)} problems pass the count filters "
          f"(cost and output checks run during ingest)")


def main() -> int:
    try:
        config = Config.load()
    except WedgeError as e:
        print(f"❌ {e}")
        return e.exit_code

    print("=" * 80)
    print("WEDGE DIAGNOSTIC REPORT")
    print(f"Generated: {datetime.now()}")
    print("=" * 80)
    print()
    print(f"Configuration:\n{config!r}\n")

    ready = check_toolchains(config)
    print()
    check_tools()

    if len(sys.argv) > 1:
        diagnose_corpus(sys.argv[1], config)
    print()
    return 0 if ready else 1


if __name__ == "__main__":
    sys.exit(main())
