"""
Error hierarchy for the WEDGE pipeline.

Every error carries the CLI exit code of its family so the command layer can
map failures without inspecting messages.
"""

from typing import List, Optional


class WedgeError(Exception):
    """Base class for all pipeline errors."""

    exit_code: int = 1

    def to_dict(self) -> dict:
        """Structured form written to the manifest and the error report."""
        return {"error": type(self).__name__, "message": str(self)}


# ============================================================================
# Usage (exit 2)
# ============================================================================

class ConfigError(WedgeError):
    """Invalid configuration or command-line usage."""

    exit_code = 2


# ============================================================================
# Stage preconditions (exit 3)
# ============================================================================

class StagePreconditionError(WedgeError):
    """A stage was invoked before the stages it depends on."""

    exit_code = 3

    def __init__(self, stage: str, missing: str, hint: str = ""):
        self.stage = stage
        self.missing = missing
        message = f"stage '{stage}' requires stage '{missing}' to be completed first"
        if hint:
            message += f" ({hint})"
        super().__init__(message)

    def to_dict(self) -> dict:
        data = super().to_dict()
        data.update({"stage": self.stage, "missing_stage": self.missing})
        return data


class MissingManifest(WedgeError):
    """Corpus root or run directory has no manifest."""

    exit_code = 3


class MalformedEntry(WedgeError):
    """A corpus entry failed validation."""

    exit_code = 3

    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")


class DuplicateId(WedgeError):
    """Two corpus entities share an id."""

    exit_code = 3

    def __init__(self, entity_id: str):
        self.entity_id = entity_id
        super().__init__(f"duplicate id: {entity_id}")


class MissingProfiles(WedgeError):
    """Filtering needs cost data that was never measured."""

    exit_code = 3

    def __init__(self, problem_id: str):
        self.problem_id = problem_id
        super().__init__(f"missing cost profiles for problem {problem_id}")


class NoQualifyingPair(WedgeError):
    """No pair of default tests meets the minimum cost ratio."""

    exit_code = 3


class ProfileMismatch(WedgeError):
    """Two line profiles belong to different solutions."""

    exit_code = 3


class BothEmpty(WedgeError):
    """Similarity metric called with two empty token lists."""


class EmptyQueue(WedgeError):
    """Scheduler called with an empty queue."""


# ============================================================================
# Provider (exit 4)
# ============================================================================

class ProviderError(WedgeError):
    """The LLM provider failed to answer."""

    exit_code = 4


class UnparseableResponse(ProviderError):
    """The provider answered, but not in the required envelope."""


class ValidatorSynthesisFailed(ProviderError):
    """No validator accepted every official test within the round limit."""

    def __init__(self, message: str, transcript: Optional[List[dict]] = None):
        self.transcript = transcript or []
        super().__init__(message)


# ============================================================================
# Build / execution (exit 5)
# ============================================================================

class BuildFailed(WedgeError):
    """Compilation (or syntax check) failed."""

    exit_code = 5

    def __init__(self, log: str, logs: Optional[List[str]] = None):
        self.log = log
        self.logs = logs or [log]
        super().__init__(f"build failed:\n{log[-2000:]}")


class UnsupportedLanguage(WedgeError):
    """No toolchain configured for a language tag."""

    exit_code = 5

    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"no toolchain configured for language '{tag}'")


class InputTooLarge(WedgeError):
    """Input exceeds the configured maximum size."""

    exit_code = 5


class SandboxFailure(WedgeError):
    """The process could not be started or supervised."""

    exit_code = 5


class MeterUnavailable(WedgeError):
    """The configured cost meter cannot produce a measurement."""

    exit_code = 5


class ProfileUnavailable(WedgeError):
    """Line profile requested from an artifact that cannot provide one."""

    exit_code = 5


class OutputDivergence(WedgeError):
    """Instrumented program changed stdout on a default test."""

    exit_code = 5

    def __init__(self, test_id: str, detail: str = ""):
        self.test_id = test_id
        message = f"instrumented output differs from original on test {test_id}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class MutatorUnavailable(WedgeError):
    """A campaign's mutator plugin could not be started."""

    exit_code = 5


class PluginCrash(MutatorUnavailable):
    """A mutator plugin crashed, timed out or broke the wire protocol."""

    def __init__(self, message: str, stderr: str = ""):
        self.stderr = stderr
        super().__init__(f"{message}\n{stderr[-2000:]}" if stderr else message)


class ValidatorCrash(WedgeError):
    """Validator plugin crashed or timed out."""

    exit_code = 5


class IoError(WedgeError):
    """Output directory cannot be written."""

    exit_code = 5


# ============================================================================
# Statistics
# ============================================================================

class StatsError(WedgeError):
    """Invalid input to an evaluation statistic."""


class EmptySample(StatsError):
    """A sample has no values."""


class ZeroMean(StatsError):
    """Coefficient of variation is undefined for a zero mean."""


class DomainMismatch(StatsError):
    """Two program maps cover different programs."""


class NonpositiveBaseline(StatsError):
    """A baseline cost is zero or negative."""


class InsufficientTechniques(StatsError):
    """A program has fewer than two techniques to compare."""
