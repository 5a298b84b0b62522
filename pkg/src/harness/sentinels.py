"""
Stderr sentinel grammar.

Instrumented programs report checker hits one per line on stderr as
``WEDGE_CHECK_HIT:<checker_id>``. Lines starting with the legacy warning text
count as a hit of checker ``legacy``. Trace-counter fixtures report their step
count as a final ``WEDGE_COST:<n>`` line.
"""

import re
from typing import FrozenSet, Iterable, Optional

CHECK_HIT_PREFIX = "WEDGE_CHECK_HIT:"
COST_PREFIX = "WEDGE_COST:"
LEGACY_WARNING = "Warning: Performance bottleneck condition triggered"
LEGACY_CHECKER_ID = "legacy"

CHECKER_ID_RE = re.compile(r"^[A-Za-z0-9_]+$")
_HIT_LINE_RE = re.compile(r"^WEDGE_CHECK_HIT:([A-Za-z0-9_]+)\s*$")
_COST_LINE_RE = re.compile(r"^WEDGE_COST:(\d+)\s*$")


def _lines(stderr) -> Iterable[str]:
    if isinstance(stderr, (bytes, bytearray)):
        stderr = bytes(stderr).decode("utf-8", errors="replace")
    return stderr.splitlines()


def parse_checker_hits(stderr) -> FrozenSet[str]:
    """
    Extract checker ids from stderr.

    Args:
        stderr: Captured stderr (bytes or text)

    Returns:
        Set of checker ids that reported a hit
    """
    hits = set()
    for line in _lines(stderr):
        match = _HIT_LINE_RE.match(line)
        if match:
            hits.add(match.group(1))
        elif line.startswith(LEGACY_WARNING):
            hits.add(LEGACY_CHECKER_ID)
    return frozenset(hits)


def emit_checker_hits(checker_ids: Iterable[str]) -> bytes:
    """Render hit lines for the given ids in sorted order."""
    lines = []
    for checker_id in sorted(set(checker_ids)):
        if not CHECKER_ID_RE.match(checker_id):
            raise ValueError(f"invalid checker id: {checker_id!r}")
        lines.append(f"{CHECK_HIT_PREFIX}{checker_id}\n")
    return "".join(lines).encode("ascii")


def parse_trace_cost(stderr) -> Optional[int]:
    """
    Read the step count from the final non-empty stderr line.

    Returns:
        Step count, or None when the final line is not a cost line
    """
    lines = [line for line in _lines(stderr) if line.strip()]
    if not lines:
        return None
    match = _COST_LINE_RE.match(lines[-1])
    return int(match.group(1)) if match else None
