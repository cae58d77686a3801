"""
Configuration management for the application.

This module uses Pydantic to provide a hierarchical, type-safe configuration
system. Settings are read from a YAML file or a flat ``key=value`` file and can
be overridden with environment variables and command-line flags.
"""

from __future__ import annotations

import collections.abc
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

CONFIG_FILE_NAME = "config.yaml"
ENV_PREFIX = "PY_PROFILE_SPREADERS_"
YAML_SUFFIXES = (".yaml", ".yml")


def deep_merge(source: Dict, destination: Dict) -> Dict:
    """
    Recursively merges source dict into destination dict.
    Nested dictionaries are merged, other values in destination are overwritten.
    """
    for key, value in source.items():
        if isinstance(value, collections.abc.Mapping) and key in destination:
            destination[key] = deep_merge(value, destination.get(key, {}))
        else:
            destination[key] = value
    return destination


class NetworkConfig(BaseModel):
    """Hyperparameters of the feed-forward fusion network."""

    model_config = ConfigDict(extra="forbid")

    hidden_units: int = Field(64, gt=0)
    learning_rate: float = Field(0.01, gt=0)
    epochs: int = Field(100, ge=0)
    batch_size: int = Field(32, gt=0)
    class_weighting: bool = False


class PipelineConfig(BaseModel):
    """The application's strict configuration model."""

    model_config = ConfigDict(extra="forbid")

    tweets_path: Optional[str] = None
    users_path: Optional[str] = None
    labels_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    embeddings_path: Optional[str] = None
    features_path: Optional[str] = None
    output_dir: str = "./output"

    spreader_threshold: int = Field(3, ge=1)
    target_words: int = Field(150, ge=1)
    reference_now: datetime
    split_ratio: float = Field(0.8, gt=0, lt=1)
    seed: Optional[int] = Field(None, ge=0, lt=2**32)
    baseline_embed: bool = False
    embedding_dim: int = Field(256, ge=1)
    workers: int = Field(1, ge=1)

    network: NetworkConfig = Field(default_factory=NetworkConfig)

    @field_validator("reference_now")
    @classmethod
    def validate_reference_now(cls, v: datetime) -> datetime:
        if v.tzinfo is None:
            raise ValueError("reference_now must carry a UTC offset (RFC 3339)")
        return v.astimezone(timezone.utc)


# Helper model used ONLY to read environment variables. Every field is optional
# so a partially configured environment never fails on its own.
class _EnvSettings(BaseSettings):
    """Helper model to load environment variables without strict validation."""

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_nested_delimiter="__",
        case_sensitive=False,
    )

    tweets_path: Optional[str] = None
    users_path: Optional[str] = None
    labels_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    embeddings_path: Optional[str] = None
    features_path: Optional[str] = None
    output_dir: Optional[str] = None
    spreader_threshold: Optional[int] = None
    target_words: Optional[int] = None
    reference_now: Optional[str] = None
    split_ratio: Optional[float] = None
    seed: Optional[int] = None
    baseline_embed: Optional[bool] = None
    embedding_dim: Optional[int] = None
    workers: Optional[int] = None
    network: Optional[Dict[str, Any]] = None


def parse_flat_config(text: str) -> Dict[str, Any]:
    """
    Parses a flat ``key=value`` configuration text into a nested dictionary.

    Dotted keys (``network.epochs=5``) address nested sections, and a bare
    network field name (``epochs=5``) is filed under ``network`` as well.
    Values stay strings; the Pydantic model performs the type coercion.
    """
    result: Dict[str, Any] = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"Line {line_number}: expected 'key=value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"Line {line_number}: empty key")
        section = result
        *parents, leaf = key.split(".")
        if not parents and leaf in NetworkConfig.model_fields:
            parents = ["network"]
        for parent in parents:
            section = section.setdefault(parent, {})
            if not isinstance(section, dict):
                raise ValueError(f"Line {line_number}: {key!r} conflicts with a value")
        section[leaf] = value
    return result


def _read_config_file(config_path: str) -> Dict[str, Any]:
    with open(config_path, "r", encoding="utf-8") as f:
        text = f.read()
    if config_path.lower().endswith(YAML_SUFFIXES):
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ValueError(f"Malformed YAML in {config_path}: {e}") from e
        if not isinstance(loaded, dict):
            raise ValueError(f"{config_path} must contain a mapping at top level")
        return loaded
    return parse_flat_config(text)


def load_config(path: Optional[str] = None) -> PipelineConfig:
    """
    Loads application configuration with correct precedence.

    The loading precedence is:
    1. Environment Variables
    2. Configuration File (YAML, or flat key=value for any other suffix)
    3. Model Default Values (from the `PipelineConfig` model)

    Args:
        path: Path to the configuration file. Defaults to './config.yaml'.

    Returns:
        A fully populated and validated PipelineConfig object.
    """
    config_path = path or f"./{CONFIG_FILE_NAME}"

    file_config: Dict[str, Any] = {}
    if Path(config_path).is_file():
        file_config = _read_config_file(config_path)

    try:
        env_loader = _EnvSettings()
        # `exclude_unset=True` ensures we only get values explicitly set in the env.
        env_config = env_loader.model_dump(exclude_unset=True)
        merged_config = deep_merge(source=env_config, destination=file_config)
        return PipelineConfig(**merged_config)
    except ValidationError as e:
        raise ValueError(f"Configuration validation error: {e}") from e


def apply_overrides(config: PipelineConfig, **overrides: Any) -> PipelineConfig:
    """
    Returns a revalidated copy of ``config`` with command-line overrides applied.

    Overrides set to ``None`` are ignored. Keys of the form ``network__epochs``
    address the nested network section.
    """
    data = config.model_dump()
    for key, value in overrides.items():
        if value is None:
            continue
        if "__" in key:
            section, leaf = key.split("__", 1)
            data.setdefault(section, {})[leaf] = value
        else:
            data[key] = value
    try:
        return PipelineConfig(**data)
    except ValidationError as e:
        raise ValueError(f"Configuration validation error: {e}") from e
