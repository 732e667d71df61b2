"""Pipeline configuration file (YAML or JSON)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .boost import MODES, OFFLINE
from .synth import SynthConfig
from .tracker import TrackerConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    boost_mode: str = OFFLINE
    iou_threshold: float = 0.5
    synth: SynthConfig = field(default_factory=SynthConfig)
    paths: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.boost_mode not in MODES:
            raise ConfigError(f"boost_mode must be one of {MODES}, got {self.boost_mode!r}")
        if not 0 < self.iou_threshold <= 1:
            raise ConfigError("eval.iou_threshold must lie in (0, 1]")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], base_dir: Optional[Path] = None) -> "PipelineConfig":
        data = dict(data or {})
        unknown = set(data) - {"tracker", "boost_mode", "eval", "synth", "paths"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        try:
            tracker = TrackerConfig(**(data.get("tracker") or {}))
            synth_data = dict(data.get("synth") or {})
            if base_dir is not None:
                for key in ("sprite_paths", "background_paths"):
                    synth_data[key] = [str(base_dir / p) for p in synth_data.get(key, [])]
            synth = SynthConfig.from_dict(synth_data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        return cls(
            tracker=tracker,
            boost_mode=data.get("boost_mode", OFFLINE),
            iou_threshold=float((data.get("eval") or {}).get("iou_threshold", 0.5)),
            synth=synth,
            paths=dict(data.get("paths") or {}),
        )


def load_config(path) -> PipelineConfig:
    """Read a config file; relative synth asset paths resolve against its folder."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return PipelineConfig.from_dict(data, base_dir=path.parent)
