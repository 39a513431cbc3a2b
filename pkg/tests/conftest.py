from __future__ import annotations

import numpy as np
import pytest

from splatcorr.scene import Camera, Group, Scene, Splat


def make_camera(
    fx: float = 100.0,
    fy: float | None = None,
    cx: float = 50.0,
    cy: float = 50.0,
    width: int = 101,
    height: int = 101,
    rotation: np.ndarray | None = None,
    translation: np.ndarray | None = None,
) -> Camera:
    """Camera at the origin looking down +z unless a pose is given."""
    r = np.eye(3) if rotation is None else np.asarray(rotation, dtype=np.float64)
    t = np.zeros(3) if translation is None else np.asarray(translation, dtype=np.float64)
    w2c = np.hstack([r, t[:, None]])
    return Camera(fx=fx, fy=fx if fy is None else fy, cx=cx, cy=cy,
                  world_to_camera=w2c, width=width, height=height)


def static_group() -> Group:
    return Group(
        keyframe_positions=np.zeros((2, 3)),
        keyframe_rotations=np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (2, 1)),
        keyframe_interval=10.0,
        is_static=True,
    )


def make_splat(position, **kwargs) -> Splat:
    defaults = dict(
        rotation=np.array([1.0, 0.0, 0.0, 0.0]),
        scale=np.array([0.1, 0.1, 0.1]),
        opacity=0.9,
        color=np.array([1.0, 0.0, 0.0]),
        displacement=np.zeros(3),
        group_id=0,
    )
    defaults.update(kwargs)
    return Splat(position=np.asarray(position, dtype=np.float64), **defaults)


def single_splat_scene(position=(0.0, 0.0, 2.0), num_frames: int = 3, **kwargs) -> Scene:
    return Scene(splats=[make_splat(position, **kwargs)], groups=[static_group()],
                 num_frames=num_frames)


@pytest.fixture
def camera() -> Camera:
    return make_camera()
