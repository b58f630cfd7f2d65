"""Tracker configuration and its flat ``key = value`` text form."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping


class ConfigError(ValueError):
    """Invalid threshold combination or unparseable config entry."""


# Short names accepted wherever config keys are parsed.
ALIASES = {
    "L_h": "high_score_threshold",
    "L_l": "low_score_threshold",
    "L_n": "new_track_threshold",
    "L_cr": "covered_ratio_threshold",
    "L_c": "confidence_threshold",
}


@dataclass(frozen=True)
class TrackerConfig:
    high_score_threshold: float = 0.6
    low_score_threshold: float = 0.1
    new_track_threshold: float = 0.8
    covered_ratio_threshold: float = 0.7
    confidence_threshold: float = 2.0
    stage1_min_niou: float = 0.0
    stage2_min_niou: float = 0.4
    prune_patience: int = 3

    # pipeline switches (ablations)
    camera_motion_removal: bool = True
    occlusion_handling: bool = True
    low_score_stage: bool = True
    carry_unmatched_detections: bool = False
    # move the predicted track states by the estimated camera shift, not just the boxes used for matching
    shift_track_states: bool = True
    # fraction cut from each tail before averaging shifts; 0 = plain mean
    shift_trim_fraction: float = 0.0

    # Kalman noise, as multiples of the current box height (aspect terms absolute)
    std_weight_position: float = 0.05
    std_weight_velocity: float = 0.00625
    std_aspect: float = 0.01
    std_aspect_velocity: float = 1e-5
    init_velocity_variance_factor: float = 10.0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.low_score_threshold < self.high_score_threshold <= 1.0:
            raise ConfigError(
                "need low_score_threshold < high_score_threshold <= 1, got "
                f"{self.low_score_threshold} and {self.high_score_threshold}"
            )
        if not 0.0 <= self.low_score_threshold:
            raise ConfigError("low_score_threshold must be >= 0")
        if not self.new_track_threshold <= 1.0:
            raise ConfigError("new_track_threshold must be <= 1")
        if not 0.0 < self.covered_ratio_threshold < 1.0:
            raise ConfigError("covered_ratio_threshold must lie in (0, 1)")
        if not self.confidence_threshold > 0.0:
            raise ConfigError("confidence_threshold must be > 0")
        if self.prune_patience < 1:
            raise ConfigError("prune_patience must be >= 1")
        if not 0.0 <= self.shift_trim_fraction < 0.5:
            raise ConfigError("shift_trim_fraction must lie in [0, 0.5)")
        for name in ("std_weight_position", "std_weight_velocity", "std_aspect",
                     "std_aspect_velocity", "init_velocity_variance_factor"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be > 0")

    def with_overrides(self, overrides: Mapping[str, str]) -> "TrackerConfig":
        """Return a copy with string-valued overrides parsed against field types."""
        types = {f.name: f.type for f in fields(self)}
        parsed = {}
        for key, raw in overrides.items():
            name = ALIASES.get(key, key)
            if name not in types:
                raise ConfigError(f"unknown config key {key!r}")
            parsed[name] = _parse_value(name, types[name], raw)
        return dataclasses.replace(self, **parsed)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return "".join(f"{k} = {_format_value(v)}\n" for k, v in self.to_dict().items())


def _parse_value(name: str, typ, raw: str):
    raw = str(raw).strip()
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def parse_assignments(items: Iterable[str]) -> dict[str, str]:
    """Parse ``key=value`` strings (as given to ``--set``)."""
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None) -> TrackerConfig:
    """Defaults, then the config file, then ``overrides`` (later wins)."""
    values: dict[str, str] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    if overrides:
        values.update(overrides)
    return TrackerConfig().with_overrides(values)
