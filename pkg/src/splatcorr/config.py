"""Pipeline configuration: defaults, schema checking, error reporting.

Configs are plain JSON objects.  validate_config fills in defaults and
rejects unknown keys or out-of-domain values with a ConfigError that
names the exact offending key path, which the CLI turns into exit code 2.
"""

from __future__ import annotations

import copy
from typing import Any

from .synth import MOTIONS


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"config.{path}: {message}" if path else f"config: {message}")


DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 1,
    "threads": 1,
    "output_dir": "pipeline_out",
    "write_images": True,
    "synth": {
        "n_splats": 300,
        "motion": "rigid-translation",
        "extent": 4.0,
        "n_cameras": 4,
        "n_frames": 9,
        "width": 128,
        "height": 96,
        "keyframe_interval": 10.0,
    },
    "degrade": [],
    "group_split": {
        "enabled": False,
        "direction_threshold": 0.9,
        "displacement_cutoff": None,
        "opacity_threshold": 0.05,
        "min_component_size": 2,
    },
    "correction": {
        "passes": 0,
        "delta_rgb": 0.1,
        "kernel_n": 3,
        "depth_tolerance": 0.02,
        "visibility_alpha": 0.5,
        "dynamicity_threshold": 0.05,
        "abs_error_threshold": 0.05,
        "rel_error_quantile": 0.5,
        "eps_spatial": 2.0,
        "min_pts": 4,
        "color_scale": 50.0,
        "fill_ratio_threshold": 0.8,
        "min_cluster_size": 8,
        "max_split_depth": 12,
    },
}


def _check_type(value, expected, path: str):
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {type(value).__name__}")
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
        return value
    if expected is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {type(value).__name__}")
        return value
    if expected is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {type(value).__name__}")
        return value
    raise AssertionError(f"unhandled type {expected}")


def _merge_section(defaults: dict, given, path: str) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(path, f"expected an object, got {type(given).__name__}")
    merged = copy.deepcopy(defaults)
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")
        merged[key] = value
    return merged


_POSITIVE = {
    "synth.extent", "synth.keyframe_interval",
    "correction.delta_rgb", "correction.eps_spatial", "correction.color_scale",
    "group_split.opacity_threshold",
}
_NON_NEGATIVE = {
    "correction.depth_tolerance", "correction.dynamicity_threshold",
    "correction.abs_error_threshold",
}


def validate_config(raw: dict) -> dict:
    """Merge with defaults and verify every field's type and domain."""
    if not isinstance(raw, dict):
        raise ConfigError("", f"expected a JSON object, got {type(raw).__name__}")
    cfg = _merge_section(DEFAULT_CONFIG, raw, "")
    cfg["synth"] = _merge_section(DEFAULT_CONFIG["synth"], cfg["synth"], "synth")
    cfg["group_split"] = _merge_section(DEFAULT_CONFIG["group_split"], cfg["group_split"], "group_split")
    cfg["correction"] = _merge_section(DEFAULT_CONFIG["correction"], cfg["correction"], "correction")

    cfg["seed"] = _check_type(cfg["seed"], int, "seed")
    cfg["threads"] = _check_type(cfg["threads"], int, "threads")
    if cfg["threads"] < 1:
        raise ConfigError("threads", f"must be >= 1, got {cfg['threads']}")
    cfg["output_dir"] = _check_type(cfg["output_dir"], str, "output_dir")
    cfg["write_images"] = _check_type(cfg["write_images"], bool, "write_images")

    s = cfg["synth"]
    s["n_splats"] = _check_type(s["n_splats"], int, "synth.n_splats")
    s["motion"] = _check_type(s["motion"], str, "synth.motion")
    if s["motion"] not in MOTIONS:
        raise ConfigError("synth.motion", f"'{s['motion']}' not one of {sorted(MOTIONS)}")
    s["extent"] = _check_type(s["extent"], float, "synth.extent")
    s["n_cameras"] = _check_type(s["n_cameras"], int, "synth.n_cameras")
    if s["n_cameras"] < 2:
        raise ConfigError("synth.n_cameras", f"must be >= 2, got {s['n_cameras']}")
    s["n_frames"] = _check_type(s["n_frames"], int, "synth.n_frames")
    if s["n_frames"] < 3:
        raise ConfigError("synth.n_frames", f"must be >= 3, got {s['n_frames']}")
    if s["n_splats"] < 1:
        raise ConfigError("synth.n_splats", f"must be >= 1, got {s['n_splats']}")
    s["width"] = _check_type(s["width"], int, "synth.width")
    s["height"] = _check_type(s["height"], int, "synth.height")
    if s["width"] < 16 or s["height"] < 16:
        raise ConfigError("synth.width", f"image size {s['width']}x{s['height']} too small (min 16)")
    s["keyframe_interval"] = _check_type(s["keyframe_interval"], float, "synth.keyframe_interval")

    if not isinstance(cfg["degrade"], list):
        raise ConfigError("degrade", f"expected a list, got {type(cfg['degrade']).__name__}")
    for i, op in enumerate(cfg["degrade"]):
        if not isinstance(op, dict):
            raise ConfigError(f"degrade[{i}]", "expected an object")
        name = op.get("op")
        known = {
            "remove-fraction": {"op", "fraction"},
            "remove-region": {"op", "box"},
            "inflate-occluder": {"op", "index", "factor"},
            "perturb-displacement": {"op", "sigma"},
        }
        if name not in known:
            raise ConfigError(f"degrade[{i}].op", f"unknown op '{name}'")
        extra = set(op) - known[name]
        if extra:
            raise ConfigError(f"degrade[{i}]", f"unknown key(s) {sorted(extra)} for op '{name}'")
        missing = known[name] - set(op)
        if missing:
            raise ConfigError(f"degrade[{i}]", f"missing key(s) {sorted(missing)} for op '{name}'")

    g = cfg["group_split"]
    g["enabled"] = _check_type(g["enabled"], bool, "group_split.enabled")
    g["direction_threshold"] = _check_type(g["direction_threshold"], float, "group_split.direction_threshold")
    if g["displacement_cutoff"] is not None:
        g["displacement_cutoff"] = _check_type(g["displacement_cutoff"], float, "group_split.displacement_cutoff")
    g["opacity_threshold"] = _check_type(g["opacity_threshold"], float, "group_split.opacity_threshold")
    g["min_component_size"] = _check_type(g["min_component_size"], int, "group_split.min_component_size")
    if g["min_component_size"] < 1:
        raise ConfigError("group_split.min_component_size", "must be >= 1")

    c = cfg["correction"]
    c["passes"] = _check_type(c["passes"], int, "correction.passes")
    if c["passes"] < 0:
        raise ConfigError("correction.passes", f"must be >= 0, got {c['passes']}")
    for key in (
        "delta_rgb", "depth_tolerance", "visibility_alpha", "dynamicity_threshold",
        "abs_error_threshold", "rel_error_quantile", "eps_spatial", "color_scale",
        "fill_ratio_threshold",
    ):
        c[key] = _check_type(c[key], float, f"correction.{key}")
    for key in ("kernel_n", "min_pts", "min_cluster_size", "max_split_depth"):
        c[key] = _check_type(c[key], int, f"correction.{key}")
    if c["kernel_n"] < 1 or c["kernel_n"] % 2 == 0:
        raise ConfigError("correction.kernel_n", f"must be odd and positive, got {c['kernel_n']}")
    if not 0.0 <= c["rel_error_quantile"] <= 1.0:
        raise ConfigError("correction.rel_error_quantile", f"must be in [0, 1], got {c['rel_error_quantile']}")
    if c["min_pts"] < 1:
        raise ConfigError("correction.min_pts", "must be >= 1")

    for path in _POSITIVE:
        section, key = path.split(".")
        if cfg[section][key] is not None and cfg[section][key] <= 0:
            raise ConfigError(path, f"must be positive, got {cfg[section][key]}")
    for path in _NON_NEGATIVE:
        section, key = path.split(".")
        if cfg[section][key] < 0:
            raise ConfigError(path, f"must be >= 0, got {cfg[section][key]}")
    return cfg
