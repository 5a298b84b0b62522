"""
Analyze WEDGE log files for stage progress and failures.

Usage:
    python analyze_logs.py logs/wedge_20261017.log
"""

import json
import sys
from collections import defaultdict


def summarize_entries(lines):
    """Collect stage, failure and campaign statistics from JSON log lines."""
    summary = {
        "entries": 0,
        "invalid_lines": [],
        "errors": [],
        "warnings": [],
        "by_stage": defaultdict(int),
        "completed_stages": [],
        "failed_solutions": defaultdict(list),
        "campaigns": 0,
        "mutator_fallbacks": [],
        "provider_retries": 0,
    }

    for line_num, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as e:
            summary["invalid_lines"].append((line_num, str(e)))
            continue

        summary["entries"] += 1
        level = entry.get('level', '')
        message = entry.get('message', '')
        stage = entry.get('stage')

        if level == 'ERROR':
            summary["errors"].append(entry)
        elif level == 'WARNING':
            summary["warnings"].append(entry)

        if stage:
            summary["by_stage"][stage] += 1
            if message.startswith("✅ Stage ") and message.endswith(" completed"):
                summary["completed_stages"].append(stage)
            # "❌ <stage> failed for <id>: <reason>"
            if level == 'ERROR' and " failed for " in message:
                key = message.split(" failed for ", 1)[1].split(":", 1)[0]
                summary["failed_solutions"][stage].append(key)

        if message.startswith("✅ Campaign "):
            summary["campaigns"] += 1
        if "continuing with the builtin mutator" in message:
            summary["mutator_fallbacks"].append(entry.get('solution_id', '?'))

        if "Provider request failed (attempt" in message:
            summary["provider_retries"] += 1

    return summary


def analyze_log_file(log_file_path):
    """Analyze a WEDGE log file and print a report."""

    print(f"\n📊 Analyzing log file: {log_file_path}\n")
    print("=" * 80)

    try:
        with open(log_file_path, 'r', encoding='utf-8') as f:
            summary = summarize_entries(f)
    except FileNotFoundError:
        print(f"❌ Error: File not found: {log_file_path}")
        sys.exit(1)

    for line_num, reason in summary["invalid_lines"]:
        print(f"⚠️  Line {line_num}: Invalid JSON - {reason}")

    print(f"\n📈 STAGE ACTIVITY")
    print("-" * 80)
    print(f"Total Entries: {summary['entries']}")
    for stage, count in sorted(summary["by_stage"].items()):
        done = "✅" if stage in summary["completed_stages"] else "…"
        print(f"  {done} {stage}: {count} entries")

    if summary["failed_solutions"]:
        print(f"\n🔴 FAILURES BY STAGE")
        print("-" * 80)
        for stage, keys in sorted(summary["failed_solutions"].items()):
            print(f"  • {stage}: {len(keys)} ({', '.join(sorted(set(keys))[:10])})")

    print(f"\n🎯 CAMPAIGNS")
    print("-" * 80)
    print(f"Finished Campaigns: {summary['campaigns']}")
    if summary["mutator_fallbacks"]:
        print(f"Builtin Mutator Fallbacks: {', '.join(summary['mutator_fallbacks'])}")

    print(f"\n⚠️  ERRORS AND WARNINGS")
    print("-" * 80)
    print(f"Total Errors: {len(summary['errors'])}")
    print(f"Total Warnings: {len(summary['warnings'])}")

    if summary["errors"]:
        print(f"\n🔴 Recent Errors (last 10):")
        for err in summary["errors"][-10:]:
            print(f"  • [{err.get('timestamp')}] {err.get('message')}")
            if err.get('exception'):
                print(f"    Exception: {err['exception'][:200]}...")

    print(f"\n🔍 POTENTIAL ISSUES")
    print("-" * 80)

    issues_found = False

    if not summary["completed_stages"]:
        print("  ❌ NO STAGE COMPLETED - Check the errors above")
        issues_found = True

    if summary["provider_retries"] > 5:
        print(f"  ⚠️  MANY PROVIDER RETRIES ({summary['provider_retries']}) - Gateway may be overloaded")
        issues_found = True

    if len(summary["errors"]) > 10:
        print(f"  ⚠️  HIGH ERROR COUNT ({len(summary['errors'])}) - Check error messages above")
        issues_found = True

    if not issues_found:
        print("  ✅ No obvious issues detected")

    print("\n" + "=" * 80)
    print("Analysis complete!\n")
    return summary


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print("Usage: python analyze_logs.py <log_file_path>")
        print("Example: python analyze_logs.py logs/wedge_20261017.log")
        sys.exit(1)

    analyze_log_file(sys.argv[1])
