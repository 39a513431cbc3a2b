"""Synthetic scene generation and controlled degradation.

Scenes are boxes of palette-colored splats watched by cameras on a small
arc, with a handful of motion modes:

  * static: nothing moves
  * rigid-translation: every splat shares one linear displacement, so a
    later frame is exactly the first frame shifted in world space
  * rigid-rotation: all splats ride one keyframed group that rotates
    about the vertical axis
  * two-group: two spatially separated blobs with clearly different
    displacement directions, for exercising group discovery

Degradation operators damage a scene in measurable ways (dropping
splats, carving a region, inflating an occluder, noising displacements)
so the correction stages have something real to find.  Everything is
driven by the package's own PRNG, so a (spec, seed) pair always produces
the same scene down to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import Xoshiro256StarStar
from .scene import Camera, Group, Scene, Splat
from .temporal import splat_world_pose

MOTIONS = ("static", "rigid-translation", "rigid-rotation", "two-group")

# Small fixed palette; quantized colors make ground-truth color
# comparisons across views exact instead of merely close.
PALETTE = np.array(
    [
        [0.9, 0.1, 0.1],
        [0.1, 0.8, 0.2],
        [0.15, 0.3, 0.9],
        [0.95, 0.85, 0.1],
        [0.85, 0.15, 0.85],
        [0.1, 0.85, 0.85],
        [0.95, 0.55, 0.15],
        [0.85, 0.85, 0.85],
    ]
)

CAMERA_DISTANCE_FACTOR = 1.8
CAMERA_ARC_DEGREES = 24.0
TRANSLATION_SPAN_FACTOR = 0.25   # total drift over the sequence, in extents
ROTATION_TOTAL_DEGREES = 40.0


@dataclass
class SynthSpec:
    seed: int
    n_splats: int
    motion: str
    extent: float
    n_cameras: int
    n_frames: int
    width: int = 128
    height: int = 96
    keyframe_interval: float = 10.0

    def validate(self) -> None:
        if self.motion not in MOTIONS:
            raise ValueError(f"motion '{self.motion}' not one of {MOTIONS}")
        if self.n_cameras < 2:
            raise ValueError(f"n_cameras {self.n_cameras} < 2")
        if self.n_frames < 3:
            raise ValueError(f"n_frames {self.n_frames} < 3")
        if self.n_splats < 1:
            raise ValueError(f"n_splats {self.n_splats} < 1")
        if self.extent <= 0:
            raise ValueError(f"extent {self.extent} must be positive")
        if self.width < 16 or self.height < 16:
            raise ValueError(f"image size {self.width}x{self.height} too small")


def _look_at(eye: np.ndarray, target: np.ndarray, width: int, height: int, focal: float) -> Camera:
    forward = target - eye
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 1.0, 0.0])
    x_cam = np.cross(forward, up)
    x_cam = x_cam / np.linalg.norm(x_cam)
    y_cam = np.cross(forward, x_cam)
    rot = np.stack([x_cam, y_cam, forward])
    trans = -rot @ eye
    return Camera(
        fx=focal,
        fy=focal,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
        world_to_camera=np.column_stack([rot, trans]),
        width=width,
        height=height,
    )


def make_arc_cameras(spec: SynthSpec) -> list[Camera]:
    """Cameras on a horizontal arc, all aimed at the scene center."""
    distance = CAMERA_DISTANCE_FACTOR * spec.extent
    focal = float(spec.width)
    cameras = []
    v = spec.n_cameras
    for i in range(v):
        frac = (i - (v - 1) / 2.0) / max(v - 1, 1)
        theta = math.radians(CAMERA_ARC_DEGREES) * frac
        eye = distance * np.array([math.sin(theta), 0.0, -math.cos(theta)])
        cameras.append(_look_at(eye, np.zeros(3), spec.width, spec.height, focal))
    return cameras


def _keyframe_count(spec: SynthSpec) -> int:
    horizon = max(spec.n_frames - 1, 1)
    return max(2, int(math.ceil(horizon / spec.keyframe_interval)) + 1)


def _random_unit_quat(rng: Xoshiro256StarStar) -> np.ndarray:
    # Uniform over SO(3) via the standard two-angle construction.
    u1, u2, u3 = rng.uniform(), rng.uniform(), rng.uniform()
    a = math.sqrt(1.0 - u1)
    b = math.sqrt(u1)
    return np.array(
        [
            a * math.sin(2 * math.pi * u2),
            a * math.cos(2 * math.pi * u2),
            b * math.sin(2 * math.pi * u3),
            b * math.cos(2 * math.pi * u3),
        ]
    )


def _base_splat(rng: Xoshiro256StarStar, spec: SynthSpec, center: np.ndarray, spread: float) -> Splat:
    position = np.array([center[k] + rng.uniform(-spread, spread) for k in range(3)])
    scale = np.array([rng.uniform(0.04, 0.09) * spec.extent for _ in range(3)])
    q = _random_unit_quat(rng)
    q = q / np.linalg.norm(q)
    color = PALETTE[rng.randint(len(PALETTE))].copy()
    return Splat(
        position=position,
        rotation=q,
        scale=scale,
        opacity=rng.uniform(0.8, 0.95),
        color=color,
        displacement=np.zeros(3),
        group_id=0,
        is_dynamic=False,
    )


def gen_scene(spec: SynthSpec) -> tuple[Scene, list[Camera]]:
    """Deterministic scene + cameras for a spec; same seed, same bits."""
    spec.validate()
    rng = Xoshiro256StarStar(spec.seed)
    static_kf = _keyframe_count(spec)
    key_times = np.arange(static_kf)
    identity_rots = np.tile(np.array([1.0, 0.0, 0.0, 0.0]), (static_kf, 1))
    static_group = Group(
        keyframe_positions=np.zeros((static_kf, 3)),
        keyframe_rotations=identity_rots.copy(),
        keyframe_interval=spec.keyframe_interval,
        is_static=True,
    )
    groups = [static_group]
    splats: list[Splat] = []

    if spec.motion == "two-group":
        offset = 0.6 * spec.extent
        half = spec.n_splats // 2
        d_a = np.array([0.0, 1.0, 0.0]) * (TRANSLATION_SPAN_FACTOR * spec.extent / (spec.n_frames - 1))
        d_b = np.array([0.0, 0.0, 1.0]) * (TRANSLATION_SPAN_FACTOR * spec.extent / (spec.n_frames - 1))
        for i in range(spec.n_splats):
            if i < half:
                s = _base_splat(rng, spec, np.array([-offset, 0.0, 0.0]), 0.22 * spec.extent)
                s.displacement = d_a.copy()
            else:
                s = _base_splat(rng, spec, np.array([offset, 0.0, 0.0]), 0.22 * spec.extent)
                s.displacement = d_b.copy()
            splats.append(s)
    else:
        for _ in range(spec.n_splats):
            splats.append(_base_splat(rng, spec, np.zeros(3), 0.4 * spec.extent))

        if spec.motion == "rigid-translation":
            step = TRANSLATION_SPAN_FACTOR * spec.extent / (spec.n_frames - 1)
            d = np.array([step, 0.0, 0.0])
            for s in splats:
                s.displacement = d.copy()
        elif spec.motion == "rigid-rotation":
            total = math.radians(ROTATION_TOTAL_DEGREES)
            span = (static_kf - 1) * spec.keyframe_interval
            rots = []
            for k in key_times:
                angle = total * (k * spec.keyframe_interval) / span
                rots.append([math.cos(angle / 2.0), 0.0, math.sin(angle / 2.0), 0.0])
            rotating = Group(
                keyframe_positions=np.zeros((static_kf, 3)),
                keyframe_rotations=np.array(rots),
                keyframe_interval=spec.keyframe_interval,
                is_static=False,
            )
            groups.append(rotating)
            for s in splats:
                s.group_id = 1

    scene = Scene(splats=splats, groups=groups, num_frames=spec.n_frames)
    cameras = make_arc_cameras(spec)
    return scene, cameras


def degrade(scene: Scene, ops: list[dict], seed: int = 0) -> tuple[Scene, list[dict]]:
    """Apply degradation operators to a copy of the scene.

    Each op is a dict with an 'op' key naming the operator plus its
    parameters.  Returns the degraded copy and one record per op
    describing exactly what changed (useful for assertions downstream).
    """
    out = scene.copy()
    rng = Xoshiro256StarStar(seed)
    records: list[dict] = []
    for op in ops:
        name = op.get("op")
        if name == "remove-fraction":
            fraction = float(op["fraction"])
            if not 0.0 <= fraction <= 1.0:
                raise ValueError(f"remove-fraction: fraction {fraction} outside [0, 1]")
            count = math.ceil(fraction * len(out.splats))
            removed = sorted(rng.sample_indices(len(out.splats), count))
            for idx in reversed(removed):
                del out.splats[idx]
            records.append({"op": name, "removed_indices": removed})
        elif name == "remove-region":
            box = [float(v) for v in op["box"]]
            if len(box) != 6:
                raise ValueError("remove-region: box needs [x0, y0, z0, x1, y1, z1]")
            lo = np.array(box[:3])
            hi = np.array(box[3:])
            removed = []
            for i in range(len(out.splats)):
                pos = splat_world_pose(out, i, 0.0).position
                if np.all(pos >= lo) and np.all(pos <= hi):
                    removed.append(i)
            for idx in reversed(removed):
                del out.splats[idx]
            records.append({"op": name, "removed_indices": removed})
        elif name == "inflate-occluder":
            idx = int(op["index"])
            factor = float(op["factor"])
            if not 0 <= idx < len(out.splats):
                raise ValueError(f"inflate-occluder: index {idx} out of range")
            if factor <= 0:
                raise ValueError(f"inflate-occluder: factor {factor} must be positive")
            out.splats[idx].scale = out.splats[idx].scale * factor
            records.append({"op": name, "index": idx, "factor": factor})
        elif name == "perturb-displacement":
            sigma = float(op["sigma"])
            if sigma < 0:
                raise ValueError(f"perturb-displacement: sigma {sigma} must be >= 0")
            for s in out.splats:
                noise = np.array([rng.normal(0.0, sigma) for _ in range(3)])
                s.displacement = s.displacement + noise
            records.append({"op": name, "sigma": sigma})
        else:
            raise ValueError(f"unknown degradation op '{name}'")
    return out, records
