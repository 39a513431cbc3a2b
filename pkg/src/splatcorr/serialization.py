"""JSON persistence for scenes, cameras, ellipses and reports.

Floats are written through Python's shortest round-trip repr, which
every IEEE-754 JSON parser reads back to the identical double, so a
save/load cycle is bit-exact.  Every document carries a version field.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .clustering import ErrorEllipse
from .scene import Camera, Group, Scene, Splat

FORMAT_VERSION = 1


class DataError(ValueError):
    """Malformed persisted data (bad schema, wrong shapes, missing keys)."""


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise DataError(f"{context}: missing key '{key}'")
    return obj[key]


def scene_to_dict(scene: Scene) -> dict:
    return {
        "version": FORMAT_VERSION,
        "num_frames": scene.num_frames,
        "groups": [
            {
                "keyframe_positions": g.keyframe_positions.tolist(),
                "keyframe_rotations": g.keyframe_rotations.tolist(),
                "keyframe_interval": g.keyframe_interval,
                "is_static": g.is_static,
            }
            for g in scene.groups
        ],
        "splats": [
            {
                "position": s.position.tolist(),
                "rotation": s.rotation.tolist(),
                "scale": s.scale.tolist(),
                "opacity": s.opacity,
                "color": s.color.tolist(),
                "displacement": s.displacement.tolist(),
                "opacity_center": s.opacity_center.tolist(),
                "opacity_variance": s.opacity_variance.tolist(),
                "group_id": s.group_id,
                "is_dynamic": s.is_dynamic,
            }
            for s in scene.splats
        ],
    }


def scene_from_dict(data: dict) -> Scene:
    if not isinstance(data, dict):
        raise DataError("scene: expected a JSON object")
    version = _require(data, "version", "scene")
    if version != FORMAT_VERSION:
        raise DataError(f"scene: unsupported version {version}")
    try:
        groups = [
            Group(
                keyframe_positions=np.array(_require(g, "keyframe_positions", f"groups[{i}]")),
                keyframe_rotations=np.array(_require(g, "keyframe_rotations", f"groups[{i}]")),
                keyframe_interval=_require(g, "keyframe_interval", f"groups[{i}]"),
                is_static=_require(g, "is_static", f"groups[{i}]"),
            )
            for i, g in enumerate(_require(data, "groups", "scene"))
        ]
        splats = [
            Splat(
                position=_require(s, "position", f"splats[{i}]"),
                rotation=_require(s, "rotation", f"splats[{i}]"),
                scale=_require(s, "scale", f"splats[{i}]"),
                opacity=_require(s, "opacity", f"splats[{i}]"),
                color=_require(s, "color", f"splats[{i}]"),
                displacement=_require(s, "displacement", f"splats[{i}]"),
                opacity_center=_require(s, "opacity_center", f"splats[{i}]"),
                opacity_variance=_require(s, "opacity_variance", f"splats[{i}]"),
                group_id=_require(s, "group_id", f"splats[{i}]"),
                is_dynamic=_require(s, "is_dynamic", f"splats[{i}]"),
            )
            for i, s in enumerate(_require(data, "splats", "scene"))
        ]
    except (ValueError, TypeError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"scene: {exc}") from exc
    return Scene(splats=splats, groups=groups, num_frames=_require(data, "num_frames", "scene"))


def cameras_to_dict(cameras: list[Camera]) -> dict:
    return {
        "version": FORMAT_VERSION,
        "cameras": [
            {
                "fx": c.fx,
                "fy": c.fy,
                "cx": c.cx,
                "cy": c.cy,
                "world_to_camera": c.world_to_camera.reshape(-1).tolist(),
                "width": c.width,
                "height": c.height,
            }
            for c in cameras
        ],
    }


def cameras_from_dict(data: dict) -> list[Camera]:
    if not isinstance(data, dict):
        raise DataError("cameras: expected a JSON object")
    version = _require(data, "version", "cameras")
    if version != FORMAT_VERSION:
        raise DataError(f"cameras: unsupported version {version}")
    cameras = []
    for i, c in enumerate(_require(data, "cameras", "cameras")):
        ctx = f"cameras[{i}]"
        w2c = np.array(_require(c, "world_to_camera", ctx), dtype=np.float64)
        if w2c.shape != (12,):
            raise DataError(f"{ctx}: world_to_camera must hold 12 numbers, got {w2c.shape}")
        try:
            cameras.append(
                Camera(
                    fx=_require(c, "fx", ctx),
                    fy=_require(c, "fy", ctx),
                    cx=_require(c, "cx", ctx),
                    cy=_require(c, "cy", ctx),
                    world_to_camera=w2c.reshape(3, 4),
                    width=_require(c, "width", ctx),
                    height=_require(c, "height", ctx),
                )
            )
        except (ValueError, TypeError) as exc:
            raise DataError(f"{ctx}: {exc}") from exc
    return cameras


def ellipses_to_dict(ellipses: list[ErrorEllipse]) -> dict:
    return {
        "version": FORMAT_VERSION,
        "ellipses": [
            {
                "center": e.center.tolist(),
                "semi_axes": e.semi_axes.tolist(),
                "angle": e.angle,
                "representative_color": e.representative_color.tolist(),
                "member_count": e.member_count,
            }
            for e in ellipses
        ],
    }


def save_json(path: str | Path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def load_json(path: str | Path) -> dict:
    p = Path(path)
    if not p.exists():
        raise DataError(f"{p}: file not found")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{p}: invalid JSON ({exc})") from exc


def save_scene(path: str | Path, scene: Scene) -> None:
    save_json(path, scene_to_dict(scene))


def load_scene(path: str | Path) -> Scene:
    return scene_from_dict(load_json(path))


def save_cameras(path: str | Path, cameras: list[Camera]) -> None:
    save_json(path, cameras_to_dict(cameras))


def load_cameras(path: str | Path) -> list[Camera]:
    return cameras_from_dict(load_json(path))
