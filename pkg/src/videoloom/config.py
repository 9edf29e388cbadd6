"""Run configuration: one section per stage, defaults here, overrides on top.

Every tunable lives in the resolved config (never hard-coded in stage
code), so the run manifest's parameter snapshot alone reproduces a run.
Overrides use dotted paths: ``--set tracker.max_lost_frames=3``.
"""

from __future__ import annotations

import copy
import json
import sys
from typing import Any, Mapping

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS: dict[str, dict[str, Any]] = {
    "run": {
        "clips_per_video": 1,
    },
    "sampler": {
        "policy": "fixed",  # fixed | random
        "count": 16,
        "gap": 3,
        "gap_min": 3,
        "gap_max": 5,
    },
    "tracker": {
        "high_score_threshold": 0.6,
        "low_score_threshold": 0.1,
        "iou_match_threshold_stage1": 0.5,
        "iou_match_threshold_stage2": 0.5,
        "max_lost_frames": 2,
        "motion": "constant-velocity",
    },
    "filter": {
        "min_area_fraction": 1.0 / 32.0,
        "min_length": 2,
        "min_mean_score": 0.5,
        "small_mode": "area",
        "small_scope": "any",
    },
    "taskgen": {
        "records_per_clip": 2,
        "max_subjects": 2,
        "max_query_frames": 2,
        "kind_weights": {"location": 2.0, "appearance": 1.0, "action": 1.0},
        "templates": "",  # empty = bundled pool
    },
    "tpl": {
        "keyframe_policy": "last",
        "groups": 3,
    },
    "rewardgap": {
        "t_max": 10,
        "gammas": [0.5, 0.9, 1.0],
        "policies": ["full", "half", "single"],
    },
}


def _deep_merge(base: dict, extra: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if key not in out:
            raise ConfigError(f"unknown config key '{key}'")
        if isinstance(out[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"config key '{key}' must be a section")
            out[key] = _merge_section(key, out[key], value)
        else:
            out[key] = value
    return out


def _merge_section(section: str, base: dict, extra: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if key not in out:
            raise ConfigError(f"unknown config key '{section}.{key}'")
        if isinstance(out[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"config key '{section}.{key}' must be a table")
            merged = copy.deepcopy(out[key])
            merged.update(value)
            out[key] = merged
        else:
            out[key] = value
    return out


def load_config(path: str | None = None, overrides: tuple[str, ...] = ()) -> dict:
    """Resolved config = defaults <- TOML file <- --set overrides."""
    config = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
        config = _deep_merge(config, data)
    for item in overrides:
        config = apply_override(config, item)
    return config


def apply_override(config: dict, item: str) -> dict:
    """Apply one ``stage.key=value`` override; values parse as JSON, else string."""
    if "=" not in item:
        raise ConfigError(f"override '{item}' must look like stage.key=value")
    dotted, raw = item.split("=", 1)
    parts = dotted.strip().split(".")
    if len(parts) < 2:
        raise ConfigError(f"override '{item}' must name a stage and a key")
    try:
        value: Any = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node: Mapping = {parts[-1]: value}
    for part in reversed(parts[:-1]):
        node = {part: node}
    return _deep_merge(config, node)
