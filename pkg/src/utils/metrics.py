"""
Metrics tracking module.

Tracks pipeline activity counters (builds, executions by outcome, provider
calls) for the end-of-command summary and campaign statistics.
"""

from collections import defaultdict
from datetime import datetime, timedelta, timezone
from typing import Any, Dict
import threading


class Metrics:
    """Tracks pipeline activity counters."""

    def __init__(self):
        """Initialize metrics tracker."""
        self.lock = threading.Lock()

        # Executions by outcome class: {outcome: count}
        self.executions: Dict[str, int] = defaultdict(int)

        # Checker hits by id: {checker_id: count}
        self.checker_hits: Dict[str, int] = defaultdict(int)

        self.builds: int = 0
        self.build_failures: int = 0
        self.provider_calls: int = 0
        self.provider_failures: int = 0

        self.start_time = datetime.now(timezone.utc)

    def increment_execution(self, outcome: str) -> None:
        """
        Increment execution counter.

        Args:
            outcome: Outcome class (ok, nonzero, timeout, ...)
        """
        with self.lock:
            self.executions[outcome] += 1

    def increment_checker_hit(self, checker_id: str) -> None:
        """Count one execution that reported a checker hit."""
        with self.lock:
            self.checker_hits[checker_id] += 1

    def increment_build(self, failed: bool = False) -> None:
        """Count a build attempt."""
        with self.lock:
            self.builds += 1
            if failed:
                self.build_failures += 1

    def increment_provider_call(self, failed: bool = False) -> None:
        """Count a provider request."""
        with self.lock:
            self.provider_calls += 1
            if failed:
                self.provider_failures += 1

    def get_execution_count(self, outcome: str = "") -> int:
        """
        Get execution count with optional outcome filter.

        Args:
            outcome: Optional outcome class filter

        Returns:
            Execution count
        """
        with self.lock:
            if outcome:
                return self.executions.get(outcome, 0)
            return sum(self.executions.values())

    def get_summary(self) -> Dict[str, Any]:
        """
        Get metrics summary.

        Returns:
            Dictionary with metrics summary
        """
        with self.lock:
            uptime = datetime.now(timezone.utc) - self.start_time

            return {
                "uptime_seconds": int(uptime.total_seconds()),
                "uptime_formatted": self._format_uptime(uptime),
                "executions": sum(self.executions.values()),
                "executions_by_outcome": dict(self.executions),
                "checker_hits": dict(self.checker_hits),
                "builds": self.builds,
                "build_failures": self.build_failures,
                "provider_calls": self.provider_calls,
                "provider_failures": self.provider_failures,
            }

    def reset(self) -> None:
        """Reset all metrics."""
        with self.lock:
            self.executions.clear()
            self.checker_hits.clear()
            self.builds = 0
            self.build_failures = 0
            self.provider_calls = 0
            self.provider_failures = 0
            self.start_time = datetime.now(timezone.utc)

    @staticmethod
    def _format_uptime(uptime: timedelta) -> str:
        """Format uptime duration."""
        hours, remainder = divmod(int(uptime.total_seconds()), 3600)
        minutes, seconds = divmod(remainder, 60)

        parts = []
        if hours > 0:
            parts.append(f"{hours}h")
        if minutes > 0:
            parts.append(f"{minutes}m")
        if seconds > 0 or not parts:
            parts.append(f"{seconds}s")

        return " ".join(parts)


# Process-wide counters
metrics = Metrics()
