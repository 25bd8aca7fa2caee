"""Declarative configuration: file schema, dotted-path overrides, presets.

A config file is JSON with three sections (``synthesis``, ``texture``,
``artifacts``) whose leaves are either plain values or distribution objects
``{"kind": ..., "low": ..., "high": ...}``.  All lengths are in voxels.  Two
presets ship with the package: ``complex`` (wide bounds) and ``simple``
(peaked bounds), with every simple interval inside its complex counterpart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .octsim import ArtifactConfig, TextureConfig
from .trees import Distribution, SynthesisConfig

SCHEMA_VERSION = 1
PRESET_NAMES = ("simple", "complex")


class ConfigError(ValueError):
    """Invalid configuration file or override."""


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one dataset generation run needs, minus the output path."""

    synthesis: SynthesisConfig
    texture: TextureConfig
    artifacts: ArtifactConfig

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "units": "voxel",
            "synthesis": self.synthesis.to_dict(),
            "texture": self.texture.to_dict(),
            "artifacts": self.artifacts.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}")
        try:
            return cls(
                synthesis=SynthesisConfig.from_dict(d["synthesis"]),
                texture=TextureConfig.from_dict(d["texture"]),
                artifacts=ArtifactConfig.from_dict(d["artifacts"]),
            )
        except KeyError as e:
            raise ConfigError(f"config missing section {e.args[0]!r}") from e
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def distributions(self) -> dict:
        """Dotted-path map of every Distribution in the config."""
        out = {}
        for section, cfg in (("synthesis", self.synthesis),
                             ("texture", self.texture),
                             ("artifacts", self.artifacts)):
            for name, value in vars(cfg).items():
                if isinstance(value, Distribution):
                    out[f"{section}.{name}"] = value
        return out


def apply_overrides(config_dict: dict, overrides) -> dict:
    """Apply ``section.key.leaf=value`` assignments to a raw config dict."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form path=value")
        dotted, _, raw = item.partition("=")
        keys = dotted.strip().split(".")
        node = config_dict
        for k in keys[:-1]:
            if not isinstance(node, dict) or k not in node:
                raise ConfigError(f"override path {dotted!r} not found in config")
            node = node[k]
        leaf = keys[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"override path {dotted!r} not found in config")
        try:
            node[leaf] = json.loads(raw)
        except json.JSONDecodeError:
            node[leaf] = raw  # bare strings stay strings
    return config_dict


def load_config(path, overrides=None) -> PipelineConfig:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    return PipelineConfig.from_dict(apply_overrides(d, overrides))


def save_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def preset(name: str, overrides=None) -> PipelineConfig:
    """Load a shipped preset ("simple" or "complex")."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    text = resources.files("vascsynth").joinpath(f"presets/{name}.json").read_text()
    return PipelineConfig.from_dict(apply_overrides(json.loads(text), overrides))
