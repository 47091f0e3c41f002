"""Run configuration: TOML-style key=value files with flag overrides.

A config file records one reproducible run; command-line flags win over file
values, and the resolved configuration is echoed into the annotation run
manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


def _parse_scalar(raw: str) -> Any:
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """Parse `key = value` lines; # comments and blank lines are ignored."""
    values: dict[str, Any] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or stripped.startswith("["):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: line {line_no}: expected key = value, got {line!r}")
        key, _, raw = stripped.partition("=")
        values[key.strip()] = _parse_scalar(raw)
    return values


@dataclass
class RunConfig:
    """Defaults shared across subcommands; see parse_config_file for the file form."""

    seed: int = 42
    output_dir: str = "."
    cache_dir: str = ".annobench-cache"
    model: str = "gpt-3.5-turbo"
    prompt: str = "expert+UC"
    backend: str | None = None
    base_url: str | None = None
    concurrency: int = 4
    char_budget: int = 8000
    requests_per_minute: int | None = None
    min_year: int = 2010
    min_citations: int = 1
    ratios: str = "0.70,0.15,0.15"

    @classmethod
    def from_sources(cls, file_values: dict[str, Any], overrides: dict[str, Any]) -> "RunConfig":
        """Build config from file values, then apply non-None overrides."""
        known = {f.name for f in fields(cls)}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged: dict[str, Any] = dict(file_values)
        for key, value in overrides.items():
            if key in known and value is not None:
                merged[key] = value
        return cls(**merged)

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}
