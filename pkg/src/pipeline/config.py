"""
Configuration module for the WEDGE pipeline.

Loads environment variables and provides configuration objects for all modules.
Effective settings are layered: defaults (including environment) < command-line
flags < configuration file.
"""

import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigError

# Load environment variables
load_dotenv()

GIB = 1024 ** 3
MIB = 1024 ** 2
DEFAULT_TOOLCHAINS = Path(__file__).resolve().parents[2] / "data" / "toolchains.toml"


class HarnessConfig(BaseModel):
    """Build and execution configuration."""

    wall_timeout: float = Field(default=10.0, description="Per-execution wall timeout in seconds")
    memory_cap: int = Field(default=2 * GIB, description="Address-space cap per execution in bytes")
    max_input_bytes: int = Field(default=10 * MIB, description="Largest input delivered to a program")
    cost_runs: int = Field(default=5, description="Runs averaged per cost measurement")
    meter: str = Field(default="trace_counter", description="Cost meter: trace_counter or hardware_counter")
    perf_event: str = Field(default="instructions", description="Counter event for the hardware meter")
    toolchains: str = Field(default=str(DEFAULT_TOOLCHAINS), description="Toolchain TOML file")
    build_timeout: float = Field(default=120.0, description="Compile timeout in seconds")

    @field_validator("wall_timeout", "memory_cap", "max_input_bytes", "cost_runs", "build_timeout")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Validate limits are positive."""
        if v <= 0:
            raise ValueError("harness limits must be positive")
        return v

    @field_validator("meter")
    @classmethod
    def validate_meter(cls, v: str) -> str:
        """Validate meter name."""
        if v not in ("trace_counter", "hardware_counter"):
            raise ValueError("meter must be 'trace_counter' or 'hardware_counter'")
        return v

    @classmethod
    def from_env(cls) -> "HarnessConfig":
        """Load harness config from environment variables."""
        return cls(
            wall_timeout=float(os.getenv("WEDGE_WALL_TIMEOUT", "10")),
            memory_cap=int(os.getenv("WEDGE_MEMORY_CAP", str(2 * GIB))),
            max_input_bytes=int(os.getenv("WEDGE_MAX_INPUT_BYTES", str(10 * MIB))),
            cost_runs=int(os.getenv("WEDGE_COST_RUNS", "5")),
            meter=os.getenv("WEDGE_METER", "trace_counter").lower(),
            perf_event=os.getenv("WEDGE_PERF_EVENT", "instructions"),
            toolchains=os.getenv("WEDGE_TOOLCHAINS", str(DEFAULT_TOOLCHAINS)),
            build_timeout=float(os.getenv("WEDGE_BUILD_TIMEOUT", "120")),
        )


class CorpusConfig(BaseModel):
    """Corpus filtering configuration."""

    min_instructions: int = Field(default=100_000, description="A problem needs a run above this cost")
    min_solutions: int = Field(default=10, description="Minimum correct solutions per problem")
    min_tests: int = Field(default=5, description="Minimum default tests per problem")
    require_single_output: bool = Field(default=True, description="Drop problems with multiple valid outputs")
    top_n_by_cv: int = Field(default=300, description="Keep this many problems ranked by cost CV")
    agreement_fraction: float = Field(default=0.95, description="Output agreement needed for single output")

    @field_validator("min_instructions", "min_solutions", "min_tests", "top_n_by_cv")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Validate counts are positive."""
        if v <= 0:
            raise ValueError("filter counts must be positive")
        return v

    @field_validator("agreement_fraction")
    @classmethod
    def validate_fraction(cls, v: float) -> float:
        """Validate fraction is between 0 and 1."""
        if not 0.0 <= v <= 1.0:
            raise ValueError("agreement_fraction must be between 0.0 and 1.0")
        return v

    @classmethod
    def from_env(cls) -> "CorpusConfig":
        """Load corpus config from environment variables."""
        return cls(
            min_instructions=int(os.getenv("WEDGE_MIN_INSTRUCTIONS", "100000")),
            min_solutions=int(os.getenv("WEDGE_MIN_SOLUTIONS", "10")),
            min_tests=int(os.getenv("WEDGE_MIN_TESTS", "5")),
            require_single_output=os.getenv("WEDGE_REQUIRE_SINGLE_OUTPUT", "true").lower() == "true",
            top_n_by_cv=int(os.getenv("WEDGE_TOP_N_BY_CV", "300")),
            agreement_fraction=float(os.getenv("WEDGE_AGREEMENT_FRACTION", "0.95")),
        )


class PairConfig(BaseModel):
    """Contrastive pair mining configuration."""

    min_cost_ratio: float = Field(default=2.0, description="Minimum slow/fast cost ratio")
    preview_bytes: int = Field(default=4096, description="Prompt preview budget per input")

    @field_validator("min_cost_ratio")
    @classmethod
    def validate_ratio(cls, v: float) -> float:
        """Validate ratio is at least 1."""
        if v < 1.0:
            raise ValueError("min_cost_ratio must be at least 1.0")
        return v

    @classmethod
    def from_env(cls) -> "PairConfig":
        """Load pair config from environment variables."""
        return cls(
            min_cost_ratio=float(os.getenv("WEDGE_MIN_COST_RATIO", "2.0")),
            preview_bytes=int(os.getenv("WEDGE_PREVIEW_BYTES", "4096")),
        )


class ProviderConfig(BaseModel):
    """LLM provider configuration."""

    spec: Optional[str] = Field(None, description="Provider selector, e.g. offline:<dir>")
    temperature: float = Field(default=0.8, description="Sampling temperature")
    max_tokens: int = Field(default=4096, description="Maximum response length")
    request_limit: int = Field(default=4, description="Concurrent provider requests")
    requests_per_minute: int = Field(default=60, description="Rate limit for remote providers")
    timeout: float = Field(default=300.0, description="Per-request timeout in seconds")
    retries: int = Field(default=3, description="Retry attempts for transient failures")

    @field_validator("temperature")
    @classmethod
    def validate_temperature(cls, v: float) -> float:
        """Validate temperature is non-negative."""
        if v < 0:
            raise ValueError("temperature must be >= 0")
        return v

    @classmethod
    def from_env(cls) -> "ProviderConfig":
        """Load provider config from environment variables."""
        return cls(
            spec=os.getenv("WEDGE_PROVIDER"),
            temperature=float(os.getenv("WEDGE_TEMPERATURE", "0.8")),
            max_tokens=int(os.getenv("WEDGE_MAX_TOKENS", "4096")),
            request_limit=int(os.getenv("WEDGE_REQUEST_LIMIT", "4")),
            requests_per_minute=int(os.getenv("WEDGE_REQUESTS_PER_MINUTE", "60")),
            timeout=float(os.getenv("WEDGE_PROVIDER_TIMEOUT", "300")),
            retries=int(os.getenv("WEDGE_PROVIDER_RETRIES", "3")),
        )


class MutationConfig(BaseModel):
    """Mutator synthesis configuration."""

    max_rounds: int = Field(default=5, description="Synthesis rounds before falling back to builtin")
    dry_run_seconds: float = Field(default=180.0, description="Dry-run duration per candidate")
    min_validity: float = Field(default=0.10, description="Sampled validity needed to pass a dry run")
    plugin_timeout: float = Field(default=5.0, description="Per-request plugin deadline in seconds")

    @field_validator("max_rounds")
    @classmethod
    def validate_rounds(cls, v: int) -> int:
        """Validate rounds within 1..5."""
        if not 1 <= v <= 5:
            raise ValueError("max_rounds must be between 1 and 5")
        return v

    @classmethod
    def from_env(cls) -> "MutationConfig":
        """Load mutation config from environment variables."""
        return cls(
            max_rounds=int(os.getenv("WEDGE_MUTATOR_ROUNDS", "5")),
            dry_run_seconds=float(os.getenv("WEDGE_DRY_RUN_SECONDS", "180")),
            min_validity=float(os.getenv("WEDGE_MIN_VALIDITY", "0.10")),
            plugin_timeout=float(os.getenv("WEDGE_PLUGIN_TIMEOUT", "5")),
        )


class FuzzConfig(BaseModel):
    """Fuzzing campaign configuration."""

    wall_seconds: float = Field(default=3600.0, description="Wall budget per campaign")
    max_execs: Optional[int] = Field(None, description="Execution budget per campaign")
    energy: int = Field(default=32, description="Mutations per scheduled entry")
    max_saved_inputs: int = Field(default=50_000, description="Cap on saved signature-novel inputs")
    max_solutions_per_problem: int = Field(default=10, description="Solutions fuzzed per problem")
    collect_coverage: bool = Field(default=True, description="Per-exec line coverage when cheap")

    @field_validator("energy", "max_saved_inputs", "max_solutions_per_problem")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Validate values are positive."""
        if v <= 0:
            raise ValueError("fuzz settings must be positive")
        return v

    @classmethod
    def from_env(cls) -> "FuzzConfig":
        """Load fuzz config from environment variables."""
        max_execs_str = os.getenv("WEDGE_MAX_EXECS")
        return cls(
            wall_seconds=float(os.getenv("WEDGE_FUZZ_SECONDS", "3600")),
            max_execs=int(max_execs_str) if max_execs_str else None,
            energy=int(os.getenv("WEDGE_ENERGY", "32")),
            max_saved_inputs=int(os.getenv("WEDGE_MAX_SAVED_INPUTS", "50000")),
            max_solutions_per_problem=int(os.getenv("WEDGE_MAX_SOLUTIONS_PER_PROBLEM", "10")),
            collect_coverage=os.getenv("WEDGE_COLLECT_COVERAGE", "true").lower() == "true",
        )


class FilterConfig(BaseModel):
    """Validator, consistency and benchmark configuration."""

    validator_rounds: int = Field(default=5, description="Validator synthesis rounds")
    validator_timeout: float = Field(default=10.0, description="Validator timeout in seconds")
    consistency_threshold: float = Field(default=0.95, description="Agreement needed to keep an input")
    top_k: int = Field(default=10, description="Benchmark tests per solution")

    @field_validator("consistency_threshold")
    @classmethod
    def validate_threshold(cls, v: float) -> float:
        """Validate threshold is between 0 and 1."""
        if not 0.0 <= v <= 1.0:
            raise ValueError("consistency_threshold must be between 0.0 and 1.0")
        return v

    @classmethod
    def from_env(cls) -> "FilterConfig":
        """Load filter config from environment variables."""
        return cls(
            validator_rounds=int(os.getenv("WEDGE_VALIDATOR_ROUNDS", "5")),
            validator_timeout=float(os.getenv("WEDGE_VALIDATOR_TIMEOUT", "10")),
            consistency_threshold=float(os.getenv("WEDGE_CONSISTENCY_THRESHOLD", "0.95")),
            top_k=int(os.getenv("WEDGE_TOP_K", "10")),
        )


class LogConfig(BaseModel):
    """Logging configuration."""

    level: str = Field(default="INFO", description="Log level")
    format: str = Field(default="text", description="Log format: json or text")
    directory: str = Field(default="logs", description="Directory for JSON log files")

    @classmethod
    def from_env(cls) -> "LogConfig":
        """Load log config from environment variables."""
        return cls(
            level=os.getenv("WEDGE_LOG_LEVEL", "INFO").upper(),
            format=os.getenv("WEDGE_LOG_FORMAT", "text").lower(),
            directory=os.getenv("WEDGE_LOG_DIR", "logs"),
        )


class RunConfig(BaseModel):
    """Orchestrator configuration."""

    jobs: int = Field(default_factory=lambda: os.cpu_count() or 1, description="Worker pool size")

    @field_validator("jobs")
    @classmethod
    def validate_jobs(cls, v: int) -> int:
        """Validate worker count."""
        if v <= 0:
            raise ValueError("jobs must be positive")
        return v

    @classmethod
    def from_env(cls) -> "RunConfig":
        """Load run config from environment variables."""
        jobs_str = os.getenv("WEDGE_JOBS")
        return cls(jobs=int(jobs_str)) if jobs_str else cls()


SECTIONS = {
    "harness": HarnessConfig,
    "corpus": CorpusConfig,
    "pairs": PairConfig,
    "provider": ProviderConfig,
    "mutation": MutationConfig,
    "fuzz": FuzzConfig,
    "filter": FilterConfig,
    "log": LogConfig,
    "run": RunConfig,
}


class Config:
    """Main configuration container."""

    def __init__(self):
        """Initialize all configuration sections."""
        self.harness = HarnessConfig.from_env()
        self.corpus = CorpusConfig.from_env()
        self.pairs = PairConfig.from_env()
        self.provider = ProviderConfig.from_env()
        self.mutation = MutationConfig.from_env()
        self.fuzz = FuzzConfig.from_env()
        self.filter = FilterConfig.from_env()
        self.log = LogConfig.from_env()
        self.run = RunConfig.from_env()

    @classmethod
    def load(
        cls,
        config_file: Optional[str] = None,
        overrides: Optional[Dict[str, Dict[str, Any]]] = None,
        snapshot: Optional[Dict[str, Dict[str, Any]]] = None,
    ) -> "Config":
        """
        Build the effective configuration.

        Args:
            config_file: Optional TOML file; its tables win over everything else
            overrides: Section -> field -> value from command-line flags
            snapshot: Stored configuration to start from instead of the defaults

        Returns:
            Validated Config
        """
        try:
            instance = cls.from_snapshot(snapshot) if snapshot else cls()
            if overrides:
                instance.apply(overrides)
            if config_file:
                path = Path(config_file)
                if not path.is_file():
                    raise ConfigError(f"config file not found: {config_file}")
                with open(path, "rb") as fh:
                    instance.apply(tomllib.load(fh))
        except ValueError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        instance.validate()
        return instance

    @classmethod
    def from_snapshot(cls, snapshot: Dict[str, Dict[str, Any]]) -> "Config":
        """Rebuild a Config from a manifest snapshot."""
        instance = cls()
        instance.apply(snapshot)
        return instance

    def apply(self, values: Dict[str, Dict[str, Any]]) -> None:
        """
        Merge section values into this config.

        Args:
            values: Section -> field -> value; unknown sections are rejected
        """
        for section, fields in values.items():
            if section not in SECTIONS:
                raise ConfigError(f"unknown configuration section: [{section}]")
            if not isinstance(fields, dict):
                raise ConfigError(f"section [{section}] must be a table")
            current = getattr(self, section).model_dump()
            unknown = set(fields) - set(current)
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
            current.update({k: v for k, v in fields.items() if v is not None})
            try:
                setattr(self, section, SECTIONS[section](**current))
            except ValidationError as e:
                raise ConfigError(f"invalid [{section}] settings: {e}") from e

    def validate(self) -> None:
        """Validate cross-section configuration."""
        errors = []

        if self.fuzz.max_saved_inputs < 1:
            errors.append("fuzz.max_saved_inputs must be positive")

        if self.log.format not in ("json", "text"):
            errors.append("log.format must be 'json' or 'text'")

        if self.filter.top_k <= 0:
            errors.append("filter.top_k must be positive")

        if not Path(self.harness.toolchains).is_file():
            errors.append(f"toolchain file not found: {self.harness.toolchains}")

        if errors:
            raise ConfigError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))

    def snapshot(self) -> Dict[str, Dict[str, Any]]:
        """Return the JSON-ready effective configuration."""
        return {name: getattr(self, name).model_dump(mode="json") for name in SECTIONS}

    def __repr__(self) -> str:
        """String representation (safe for logging)."""
        return (
            f"Config(\n"
            f"  meter={self.harness.meter},\n"
            f"  provider={self.provider.spec},\n"
            f"  jobs={self.run.jobs},\n"
            f"  fuzz_wall={self.fuzz.wall_seconds}s,\n"
            f"  top_k={self.filter.top_k}\n"
            f")"
        )


# Global config instance
config = Config()
