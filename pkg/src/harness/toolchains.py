"""
Toolchain configuration.

Loads per-language build/run command templates from a TOML file and expands
their placeholders into argument vectors.
"""

import shlex
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, ValidationError

from ..pipeline.errors import ConfigError, UnsupportedLanguage
from .models import ArtifactKind

TRACER_PATH = Path(__file__).resolve().parent / "line_tracer.py"


class Toolchain(BaseModel):
    """Commands for one language tag."""

    language: str
    kind: ArtifactKind
    extensions: List[str] = Field(default_factory=list)
    build: List[str] = Field(default_factory=list)
    profile_build: Optional[List[str]] = None
    run: str = "{entry}"
    profile_run: Optional[str] = None
    profile: str = "trace"

    def build_commands(self, src: Path, out: Path, profiling: bool) -> List[List[str]]:
        """Expand the build (or profiling build) templates."""
        templates = self.profile_build if profiling and self.profile_build else self.build
        return [expand(t, src=src, out=out) for t in templates]

    def run_command(self, entry: Path, profiling: bool = False) -> List[str]:
        """Expand the run (or traced run) template."""
        template = self.profile_run if profiling and self.profile_run else self.run
        return expand(template, entry=entry)


def expand(template: str, **values) -> List[str]:
    """
    Split a command template and substitute placeholders.

    Args:
        template: Command template, e.g. "g++ -O2 -o {out} {src}"
        **values: Placeholder values

    Returns:
        Argument vector
    """
    mapping = {"python": sys.executable, "tracer": str(TRACER_PATH)}
    mapping.update({k: str(v) for k, v in values.items()})
    try:
        return [token.format(**mapping) for token in shlex.split(template)]
    except KeyError as e:
        raise ConfigError(f"unknown placeholder {e} in command template: {template}")


class ToolchainRegistry:
    """Toolchains keyed by language tag."""

    def __init__(self, toolchains: Dict[str, Toolchain]):
        self.toolchains = toolchains

    @classmethod
    def from_file(cls, path) -> "ToolchainRegistry":
        """
        Load a toolchain TOML file.

        Args:
            path: File with a [languages.<tag>] table per language

        Returns:
            Registry of configured toolchains
        """
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read toolchain file {path}: {e}")

        toolchains = {}
        for tag, table in data.get("languages", {}).items():
            try:
                toolchains[tag] = Toolchain(language=tag, **table)
            except ValidationError as e:
                raise ConfigError(f"invalid toolchain [{tag}] in {path}: {e}")
        return cls(toolchains)

    def get(self, language: str) -> Toolchain:
        """Return the toolchain for a language tag."""
        if language not in self.toolchains:
            raise UnsupportedLanguage(language)
        return self.toolchains[language]

    def __contains__(self, language: str) -> bool:
        return language in self.toolchains
