"""Service wiring: catalog location, backend selection, listen address."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from ..errors import ConfigurationError

DETECTOR_CHOICES = ("oracle", "noisy-oracle", "pretrained")
PROVIDER_CHOICES = ("fixture", "live")


@dataclass(frozen=True)
class ServiceConfig:
    """Everything the service needs to build its runtime dependencies."""

    catalog_root: Path
    provider: str = "fixture"
    fixture_root: Optional[Path] = None
    search_endpoint: str = ""
    detector: str = "oracle"
    flip_rate: float = 0.0
    seed: int = 0
    classes: tuple[str, ...] = ()
    embedder_path: Optional[Path] = None
    default_level: int = 3
    host: str = "127.0.0.1"
    port: int = 8765
    ui_root: Optional[Path] = None

    def __post_init__(self):
        # Resolved eagerly so a server daemonized from another cwd still
        # finds its catalog and fixtures.
        object.__setattr__(self, "catalog_root",
                           Path(self.catalog_root).expanduser().resolve())
        for name in ("fixture_root", "embedder_path", "ui_root"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value).expanduser().resolve())
        object.__setattr__(self, "classes", tuple(self.classes))
        if self.provider not in PROVIDER_CHOICES:
            raise ConfigurationError(
                f"provider must be one of {PROVIDER_CHOICES}, got {self.provider!r}")
        if self.detector not in DETECTOR_CHOICES:
            raise ConfigurationError(
                f"detector must be one of {DETECTOR_CHOICES}, got {self.detector!r}")
        if not 1 <= self.default_level <= 5:
            raise ConfigurationError(
                f"default_level must be in [1, 5], got {self.default_level}")
        if self.provider == "fixture" and self.fixture_root is None:
            raise ConfigurationError("fixture provider requires fixture_root")
        if self.provider == "live" and not self.search_endpoint:
            raise ConfigurationError("live provider requires search_endpoint")
        if not 0.0 <= self.flip_rate < 1.0:
            raise ConfigurationError(f"flip_rate must be in [0, 1), got {self.flip_rate}")

    def check_paths(self) -> "ServiceConfig":
        """Referenced paths must exist before the service starts."""
        for name in ("fixture_root", "embedder_path", "ui_root"):
            value = getattr(self, name)
            if value is not None and not value.exists():
                raise ConfigurationError(f"{name} does not exist: {value}")
        return self


def load_config(path) -> ServiceConfig:
    """Read a JSON config file; unknown keys are rejected as typos."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    known = {f.name for f in fields(ServiceConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown config keys in {path}: {', '.join(unknown)}")
    if "catalog_root" not in data:
        raise ConfigurationError(f"config file {path} is missing catalog_root")
    # Relative paths in the file are relative to the file, not the cwd.
    base = path.expanduser().resolve().parent
    for key in ("catalog_root", "fixture_root", "embedder_path", "ui_root"):
        value = data.get(key)
        if value is not None and not Path(value).expanduser().is_absolute():
            data[key] = base / Path(value).expanduser()
    return ServiceConfig(**data)
