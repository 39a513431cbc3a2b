"""Core scene model: splats, motion groups, cameras.

A scene is a flat list of anisotropic Gaussian splats partitioned into
motion groups.  Group 0 is always the static/global group whose transform
is the identity at every time; further groups carry keyframed rigid
trajectories.  A splat's pose is stored relative to its group, plus a
per-splat linear displacement that models constant drift.

Conventions shared by the whole package:
  * quaternions are (w, x, y, z), unit length
  * scales are standard deviations along the splat's local axes
  * colors are linear RGB in [0, 1], one constant color per splat
  * time is measured in frames; keyframe k of a group sits at
    t = k * keyframe_interval
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROTATION_NORM_TOL = 1e-6


def _arr(v, n: int) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (n,):
        raise ValueError(f"expected shape ({n},), got {a.shape}")
    return a


@dataclass
class Splat:
    """One Gaussian splat, posed relative to its group.

    opacity_center / opacity_variance hold the (start, end) centers and
    widths of the temporal opacity window; they are ignored unless
    is_dynamic is set.
    """

    position: np.ndarray
    rotation: np.ndarray
    scale: np.ndarray
    opacity: float
    color: np.ndarray
    displacement: np.ndarray
    group_id: int = 0
    is_dynamic: bool = False
    opacity_center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    opacity_variance: np.ndarray = field(default_factory=lambda: np.ones(2))

    def __post_init__(self):
        self.position = _arr(self.position, 3)
        self.rotation = _arr(self.rotation, 4)
        self.scale = _arr(self.scale, 3)
        self.color = _arr(self.color, 3)
        self.displacement = _arr(self.displacement, 3)
        self.opacity_center = _arr(self.opacity_center, 2)
        self.opacity_variance = _arr(self.opacity_variance, 2)
        self.opacity = float(self.opacity)
        self.group_id = int(self.group_id)
        self.is_dynamic = bool(self.is_dynamic)

    def copy(self) -> "Splat":
        return Splat(
            position=self.position.copy(),
            rotation=self.rotation.copy(),
            scale=self.scale.copy(),
            opacity=self.opacity,
            color=self.color.copy(),
            displacement=self.displacement.copy(),
            group_id=self.group_id,
            is_dynamic=self.is_dynamic,
            opacity_center=self.opacity_center.copy(),
            opacity_variance=self.opacity_variance.copy(),
        )


@dataclass
class Group:
    """Keyframed rigid trajectory shared by a set of splats.

    keyframe_positions is (K, 3) and keyframe_rotations (K, 4); keyframe k
    is anchored at time k * keyframe_interval.  A static group ignores its
    keyframes entirely and applies the identity transform.
    """

    keyframe_positions: np.ndarray
    keyframe_rotations: np.ndarray
    keyframe_interval: float
    is_static: bool = False

    def __post_init__(self):
        self.keyframe_positions = np.asarray(self.keyframe_positions, dtype=np.float64)
        self.keyframe_rotations = np.asarray(self.keyframe_rotations, dtype=np.float64)
        if self.keyframe_positions.ndim != 2 or self.keyframe_positions.shape[1] != 3:
            raise ValueError("keyframe_positions must be (K, 3)")
        if self.keyframe_rotations.ndim != 2 or self.keyframe_rotations.shape[1] != 4:
            raise ValueError("keyframe_rotations must be (K, 4)")
        if len(self.keyframe_positions) != len(self.keyframe_rotations):
            raise ValueError("keyframe position/rotation counts differ")
        self.keyframe_interval = float(self.keyframe_interval)
        if self.keyframe_interval <= 0:
            raise ValueError("keyframe_interval must be positive")
        self.is_static = bool(self.is_static)

    @property
    def num_keyframes(self) -> int:
        return len(self.keyframe_positions)

    @property
    def span(self) -> float:
        """Length of the covered time range, (K - 1) * interval."""
        return (self.num_keyframes - 1) * self.keyframe_interval

    def copy(self) -> "Group":
        return Group(
            keyframe_positions=self.keyframe_positions.copy(),
            keyframe_rotations=self.keyframe_rotations.copy(),
            keyframe_interval=self.keyframe_interval,
            is_static=self.is_static,
        )


@dataclass
class Camera:
    """Pinhole camera; world_to_camera is the 3x4 rigid map (R | t).

    The camera frame has +z forward; a world point p maps to
    R @ p + t, then to pixels via u = fx * x / z + cx, v = fy * y / z + cy.
    Pixel (i, j) samples the continuous image plane exactly at (i, j).
    """

    fx: float
    fy: float
    cx: float
    cy: float
    world_to_camera: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        self.world_to_camera = np.asarray(self.world_to_camera, dtype=np.float64)
        if self.world_to_camera.shape != (3, 4):
            raise ValueError("world_to_camera must be (3, 4)")
        self.fx = float(self.fx)
        self.fy = float(self.fy)
        self.cx = float(self.cx)
        self.cy = float(self.cy)
        self.width = int(self.width)
        self.height = int(self.height)

    @property
    def rotation(self) -> np.ndarray:
        return self.world_to_camera[:, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.world_to_camera[:, 3]

    @property
    def optical_axis_world(self) -> np.ndarray:
        """Viewing direction (+z of the camera) expressed in world coordinates."""
        return self.rotation.T @ np.array([0.0, 0.0, 1.0])


@dataclass
class Scene:
    splats: list[Splat]
    groups: list[Group]
    num_frames: int

    def __post_init__(self):
        self.num_frames = int(self.num_frames)

    def copy(self) -> "Scene":
        return Scene(
            splats=[s.copy() for s in self.splats],
            groups=[g.copy() for g in self.groups],
            num_frames=self.num_frames,
        )


def validate_scene(scene: Scene) -> list[str]:
    """Check every structural invariant; returns one message per violation.

    An empty list means the scene is well formed.  Messages name the
    offending entity so they can be surfaced directly to a user.
    """
    problems: list[str] = []
    n_groups = len(scene.groups)
    if scene.num_frames < 1:
        problems.append(f"scene: num_frames {scene.num_frames} < 1")

    static_ids = [i for i, g in enumerate(scene.groups) if g.is_static]
    if static_ids != [0]:
        problems.append(
            f"scene: exactly group 0 must be static, static groups are {static_ids}"
        )

    for gi, group in enumerate(scene.groups):
        if not group.is_static and group.num_keyframes < 2:
            problems.append(f"group {gi}: non-static with {group.num_keyframes} keyframe(s), need >= 2")
        norms = np.linalg.norm(group.keyframe_rotations, axis=1)
        bad = np.nonzero(np.abs(norms - 1.0) > ROTATION_NORM_TOL)[0]
        for k in bad:
            problems.append(f"group {gi}: keyframe {k} rotation norm {norms[k]:.9f} != 1")

    for si, splat in enumerate(scene.splats):
        if not (0 <= splat.group_id < n_groups):
            problems.append(f"splat {si}: group_id {splat.group_id} out of range [0, {n_groups})")
        norm = float(np.linalg.norm(splat.rotation))
        if abs(norm - 1.0) > ROTATION_NORM_TOL:
            problems.append(f"splat {si}: rotation norm {norm:.9f} != 1")
        if not np.all(splat.scale > 0):
            problems.append(f"splat {si}: scale {splat.scale.tolist()} has a non-positive entry")
        if not (0.0 <= splat.opacity <= 1.0):
            problems.append(f"splat {si}: opacity {splat.opacity} outside [0, 1]")
        if not np.all((splat.color >= 0.0) & (splat.color <= 1.0)):
            problems.append(f"splat {si}: color {splat.color.tolist()} outside [0, 1]")
        if splat.opacity_center[0] > splat.opacity_center[1]:
            problems.append(
                f"splat {si}: opacity_center start {splat.opacity_center[0]} > end {splat.opacity_center[1]}"
            )
        if not np.all(splat.opacity_variance > 0):
            problems.append(
                f"splat {si}: opacity_variance {splat.opacity_variance.tolist()} has a non-positive entry"
            )
    return problems


def validate_camera(camera: Camera) -> list[str]:
    """Rotation orthonormality / handedness and intrinsics sanity."""
    problems: list[str] = []
    r = camera.rotation
    err = float(np.max(np.abs(r @ r.T - np.eye(3))))
    if err > 1e-6:
        problems.append(f"camera: rotation not orthonormal (max deviation {err:.3e})")
    det = float(np.linalg.det(r))
    if abs(det - 1.0) > 1e-6:
        problems.append(f"camera: rotation determinant {det:.9f} != +1")
    if camera.fx <= 0 or camera.fy <= 0:
        problems.append(f"camera: focal lengths ({camera.fx}, {camera.fy}) must be positive")
    if camera.width < 1 or camera.height < 1:
        problems.append(f"camera: image size {camera.width}x{camera.height} invalid")
    return problems
