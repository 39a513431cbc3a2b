"""Time evaluation: keyframe interpolation and per-splat world poses.

Group trajectories are cubic Hermite curves through their keyframe
positions with central-difference tangents, and spherical linear
interpolation between keyframe rotations.  Each curve segment is
reparameterized to the unit interval, so the position tangents are the
central differences multiplied by the keyframe interval.

A splat's world pose at time t combines its group's pose with its own
relative pose and linear displacement:

    position(t) = group_pos(t) + group_rot(t) @ rel_pos + t * displacement
    rotation(t) = group_rot(t) * rel_rot

Static groups contribute the identity, which collapses the position to
rel_pos + t * displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quat
from .scene import Group, Scene, Splat

SLERP_SIN_EPS = 1e-6


@dataclass
class Pose:
    position: np.ndarray
    rotation: np.ndarray  # unit quaternion (w, x, y, z)


def hermite_basis(u: float) -> tuple[float, float, float, float]:
    """The four cubic Hermite basis values at u in [0, 1].

    Order: start position, start tangent, end position, end tangent.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"hermite parameter {u} outside [0, 1]")
    u2 = u * u
    u3 = u2 * u
    return (
        2.0 * u3 - 3.0 * u2 + 1.0,
        u3 - 2.0 * u2 + u,
        -2.0 * u3 + 3.0 * u2,
        u3 - u2,
    )


def hermite_interpolate(
    x0: np.ndarray,
    d0: np.ndarray,
    x1: np.ndarray,
    d1: np.ndarray,
    u: float,
) -> np.ndarray:
    """Cubic Hermite curve value at u for endpoints x0, x1 with tangents d0, d1."""
    h00, h10, h01, h11 = hermite_basis(u)
    return h00 * np.asarray(x0) + h10 * np.asarray(d0) + h01 * np.asarray(x1) + h11 * np.asarray(d1)


def _keyframe_index(group: Group, t: float) -> int | None:
    """Index of the keyframe whose time equals t bit-for-bit, else None."""
    k = int(round(t / group.keyframe_interval))
    if 0 <= k < group.num_keyframes and t == k * group.keyframe_interval:
        return k
    return None


def _segment(group: Group, t: float) -> tuple[int, float]:
    """Segment index n and local parameter u for time t on a group's curve."""
    span = group.span
    if t < 0.0 or t > span:
        raise ValueError(f"time {t} outside trajectory span [0, {span}]")
    n = int(t // group.keyframe_interval)
    if n >= group.num_keyframes - 1:
        n = group.num_keyframes - 2
    u = (t - n * group.keyframe_interval) / group.keyframe_interval
    # Division noise at segment boundaries can push u a hair outside [0, 1].
    return n, min(max(u, 0.0), 1.0)


def _position_tangents(group: Group) -> np.ndarray:
    """Per-keyframe tangents, already rescaled for unit-interval segments.

    Interior keyframes use the central difference of their neighbors;
    the first and last fall back to one-sided differences.  The central
    difference (x_{n+1} - x_{n-1}) / (2 I) is multiplied by I because
    each segment is evaluated on [0, 1] rather than [0, I].
    """
    pos = group.keyframe_positions
    k = len(pos)
    tangents = np.empty_like(pos)
    tangents[0] = pos[1] - pos[0]
    tangents[-1] = pos[-1] - pos[-2]
    if k > 2:
        tangents[1:-1] = (pos[2:] - pos[:-2]) / 2.0
    return tangents


def group_position(group: Group, t: float) -> np.ndarray:
    """Cubic Hermite position of a non-static group at time t.

    Exact at keyframe times; raises ValueError outside the trajectory span.
    """
    if group.is_static:
        raise ValueError("group_position is undefined for the static group")
    k = _keyframe_index(group, t)
    if k is not None:
        return group.keyframe_positions[k].copy()
    n, u = _segment(group, t)
    tangents = _position_tangents(group)
    return hermite_interpolate(
        group.keyframe_positions[n],
        tangents[n],
        group.keyframe_positions[n + 1],
        tangents[n + 1],
        u,
    )


def slerp(q0: np.ndarray, q1: np.ndarray, u: float) -> np.ndarray:
    """Shortest-path spherical interpolation between unit quaternions.

    When the inputs are nearly aligned (sin of the subtended angle below
    SLERP_SIN_EPS) the spherical weights degenerate, so normalized linear
    interpolation is used instead.
    """
    q0 = quat.normalize(q0)
    q1 = quat.normalize(q1)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    dot = min(dot, 1.0)
    theta = math.acos(dot)
    sin_theta = math.sin(theta)
    if sin_theta < SLERP_SIN_EPS:
        return quat.normalize((1.0 - u) * q0 + u * q1)
    w0 = math.sin((1.0 - u) * theta) / sin_theta
    w1 = math.sin(u * theta) / sin_theta
    return quat.normalize(w0 * q0 + w1 * q1)


def group_rotation(group: Group, t: float) -> np.ndarray:
    """Slerped group rotation at time t; keyframe values are returned exactly."""
    if group.is_static:
        raise ValueError("group_rotation is undefined for the static group")
    k = _keyframe_index(group, t)
    if k is not None:
        return quat.normalize(group.keyframe_rotations[k])
    n, u = _segment(group, t)
    return slerp(group.keyframe_rotations[n], group.keyframe_rotations[n + 1], u)


def group_pose(group: Group, t: float) -> Pose:
    return Pose(position=group_position(group, t), rotation=group_rotation(group, t))


def temporal_opacity_weight(splat: Splat, t: float) -> float:
    """Piecewise temporal opacity window of a dynamic splat.

    1 inside [start, end]; Gaussian falloff with the respective variance
    entry outside.  Static splats always weigh 1.
    """
    if not splat.is_dynamic:
        return 1.0
    c0, c1 = splat.opacity_center
    v0, v1 = splat.opacity_variance
    if t < c0:
        return math.exp(-((t - c0) ** 2) / (v0 * v0))
    if t > c1:
        return math.exp(-((t - c1) ** 2) / (v1 * v1))
    return 1.0


def splat_world_pose(scene: Scene, splat_index: int, t: float) -> Pose:
    """World-space pose of one splat at time t.

    Raises ValueError for dynamic groups when t falls outside the group's
    keyframe span; out-of-range time is an error rather than a clamp.
    """
    splat = scene.splats[splat_index]
    group = scene.groups[splat.group_id]
    drift = t * splat.displacement
    if group.is_static:
        return Pose(position=splat.position + drift, rotation=splat.rotation.copy())
    gp = group_position(group, t)
    gr = group_rotation(group, t)
    position = gp + quat.to_matrix(gr) @ splat.position + drift
    rotation = quat.multiply(gr, splat.rotation)
    return Pose(position=position, rotation=rotation)


def effective_opacity(splat: Splat, t: float) -> float:
    """Base opacity modulated by the temporal window."""
    return splat.opacity * temporal_opacity_weight(splat, t)
