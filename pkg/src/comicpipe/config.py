"""Pipeline configuration: JSON file, environment override, flag override.

Resolution order for the config file: explicit ``--config`` flag, then the
``COMICPIPE_CONFIG`` environment variable, then ``./comicpipe.json`` if it
exists, then built-in defaults (all four backends on ``mock:echo``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backends import ROLES, BackendEndpoint
from .errors import ConfigError, InvalidInputError
from .identity import CharacterLabelRegistry
from .panelizer import PanelizerConfig
from .postprocess import DetectorConfig
from .prompting import TokenBudget

__all__ = ["PipelineConfig", "load_config", "DEFAULT_CONFIG_FILENAME", "CONFIG_ENV_VAR"]

DEFAULT_CONFIG_FILENAME = "comicpipe.json"
CONFIG_ENV_VAR = "COMICPIPE_CONFIG"


@dataclass
class PipelineConfig:
    endpoints: dict[str, BackendEndpoint] = field(
        default_factory=lambda: {
            role: BackendEndpoint(role=role, url="mock:echo") for role in ROLES
        }
    )
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    panelizer: PanelizerConfig = field(default_factory=PanelizerConfig)
    registry_path: Path | None = None
    budget: TokenBudget = field(default_factory=TokenBudget)
    series: str | None = None

    def load_registry(self) -> CharacterLabelRegistry:
        if self.registry_path is None:
            return CharacterLabelRegistry.default()
        return CharacterLabelRegistry.from_file(self.registry_path)


def _parse_endpoint(role: str, raw: dict, base_dir: Path) -> BackendEndpoint:
    url = raw.get("url", "mock:echo")
    if url.startswith("mock:") and url != "mock:echo":
        fixture = Path(url[len("mock:"):])
        if not fixture.is_absolute():
            fixture = base_dir / fixture
        if not fixture.exists():
            raise ConfigError(f"mock fixture for {role} not found: {fixture}")
        url = f"mock:{fixture}"
    record = raw.get("record")
    if record is not None and not Path(record).is_absolute():
        record = str(base_dir / record)
    return BackendEndpoint(
        role=role,
        url=url,
        timeout_ms=int(raw.get("timeout_ms", 30000)),
        max_retries=int(raw.get("max_retries", 2)),
        bearer_token=raw.get("bearer_token"),
        record_path=record,
    )


def load_config(path: str | os.PathLike | None = None) -> PipelineConfig:
    """Load configuration, falling back to env var, cwd file, then defaults."""
    if path is None:
        env = os.environ.get(CONFIG_ENV_VAR)
        if env:
            path = env
        elif Path(DEFAULT_CONFIG_FILENAME).exists():
            path = DEFAULT_CONFIG_FILENAME

    config = PipelineConfig()
    if path is None:
        return config

    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")

    base_dir = path.resolve().parent
    try:
        for role, spec in raw.get("endpoints", {}).items():
            config.endpoints[role] = _parse_endpoint(role, spec, base_dir)
        if "detector" in raw:
            config.detector = DetectorConfig(**raw["detector"])
        if "panelizer" in raw:
            config.panelizer = PanelizerConfig(**raw["panelizer"])
        if "budget" in raw:
            config.budget = TokenBudget(**raw["budget"])
    except (TypeError, InvalidInputError) as exc:
        raise ConfigError(f"config {path}: {exc}") from exc

    if "registry_path" in raw and raw["registry_path"] is not None:
        registry = Path(raw["registry_path"])
        if not registry.is_absolute():
            registry = base_dir / registry
        if not registry.exists():
            raise ConfigError(f"registry file not found: {registry}")
        config.registry_path = registry
    config.series = raw.get("series")
    return config
