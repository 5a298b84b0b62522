"""
Duration utilities module.

Parses duration and budget strings used on the command line and formats
elapsed times for reports.
"""

import re
from typing import Optional, Tuple

_UNIT_SECONDS = {"ms": 0.001, "s": 1, "m": 60, "h": 3600, "d": 86400}
_BUDGET_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([a-z]*)\s*$")


def parse_duration(text: str) -> float:
    """
    Parse a duration string to seconds.

    Args:
        text: Duration string (e.g., '500ms', '30s', '5m', '1h'); a bare number means seconds

    Returns:
        Number of seconds
    """
    match = _BUDGET_RE.match(text.lower())
    if not match:
        raise ValueError(f"Invalid duration: {text}")

    value, unit = float(match.group(1)), match.group(2) or "s"
    if unit not in _UNIT_SECONDS:
        raise ValueError(f"Invalid duration unit: {text}")
    return value * _UNIT_SECONDS[unit]


def parse_budget(text: str) -> Tuple[Optional[float], Optional[int]]:
    """
    Parse a campaign budget.

    Args:
        text: Either a duration ('90s', '1h') or an execution count ('2000execs', '2000x')

    Returns:
        Tuple of (wall seconds or None, max executions or None)
    """
    match = _BUDGET_RE.match(text.lower())
    if not match:
        raise ValueError(f"Invalid budget: {text}")

    unit = match.group(2)
    if unit in ("x", "exec", "execs"):
        if "." in match.group(1):
            raise ValueError(f"Execution budget must be an integer: {text}")
        return None, int(match.group(1))
    return parse_duration(text), None


def format_duration(seconds: float) -> str:
    """
    Format duration in seconds to human-readable string.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted string (e.g., "2h 30m", "45s", "850ms")
    """
    if seconds < 1:
        return f"{int(seconds * 1000)}ms"
    elif seconds < 60:
        return f"{seconds:.1f}s"
    elif seconds < 3600:
        minutes = int(seconds / 60)
        return f"{minutes}m {int(seconds % 60)}s"
    else:
        hours = int(seconds / 3600)
        minutes = int((seconds % 3600) / 60)
        return f"{hours}h {minutes}m"
