"""Cross-view diagnosis of error ellipses and splat-level repairs.

Every accepted error ellipse is explained by probing scene depth inside
it, lifting the probes to world space, and checking them against a second
camera:

  * if some probe is visible in the comparison view and the ground-truth
    colors of the two views agree there, the scene is missing geometry:
    a new splat shaped like the ellipse is inserted at the best probe
    (LackingSplat);
  * if the probes are visible but the colors disagree, a foreground splat
    is covering content it should not, and the nearest splat at that
    depth is split in two so later refinement can carve it (Occlusion);
  * probes that cannot be confirmed in the comparison view leave the
    ellipse untouched (Skipped, with the reason recorded).

A correction pass never deletes splats and never moves group keyframes;
it only appends splats or replaces one splat by two children in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .clustering import ClusterConfig, ErrorEllipse, cluster_errors, compute_dynamicity, select_error_pixels
from .render import RenderOutput, backproject_pixel, project_point, render
from .scene import Camera, Scene, Splat
from .temporal import group_position, group_rotation, splat_world_pose

LACKING_SPLAT = "lacking-splat"
OCCLUSION = "occlusion"
SKIPPED = "skipped"

REASON_INVALID_DEPTH = "invalid-depth"
REASON_NOT_VISIBLE = "not-visible-in-comparison"
REASON_OUT_OF_FRAME = "out-of-comparison-frame"

SPLIT_SCALE_FACTOR = 1.6


@dataclass
class CorrectionConfig:
    delta_rgb: float = 0.1
    kernel_n: int = 3
    depth_tolerance: float = 0.02      # relative depth agreement for visibility
    visibility_alpha: float = 0.5
    cluster: ClusterConfig = field(default_factory=ClusterConfig)


@dataclass
class Diagnosis:
    kind: str
    ellipse: ErrorEllipse
    min_color_diff: float = math.inf
    best_point: np.ndarray | None = None     # world point of the matched probe
    best_pixel: np.ndarray | None = None     # main-view pixel of that probe
    best_depth: float = 0.0
    center_point: np.ndarray | None = None   # world point of the probe nearest the center
    skip_reason: str | None = None


def sample_depths(
    render_out: RenderOutput, center: np.ndarray, n: int
) -> list[tuple[tuple[int, int], float]]:
    """Valid rendered depths in the n x n window around a pixel.

    n must be odd.  The window is clipped to the image; pixels without a
    valid blended depth are left out.  Samples come back in raster order
    as ((x, y), depth).
    """
    if n < 1 or n % 2 == 0:
        raise ValueError(f"window size must be odd and positive, got {n}")
    h, w = render_out.depth.shape
    cx = int(round(float(center[0])))
    cy = int(round(float(center[1])))
    half = n // 2
    out = []
    for y in range(max(cy - half, 0), min(cy + half, h - 1) + 1):
        for x in range(max(cx - half, 0), min(cx + half, w - 1) + 1):
            z = render_out.depth[y, x]
            if math.isfinite(z):
                out.append(((x, y), float(z)))
    return out


def select_comparison_view(cameras: list[Camera], main_index: int) -> int:
    """Camera whose optical axis is most parallel to the main camera's."""
    if len(cameras) < 2:
        raise ValueError("need a second camera to compare against")
    main_axis = cameras[main_index].optical_axis_world
    best = -1
    best_dot = -math.inf
    for i, cam in enumerate(cameras):
        if i == main_index:
            continue
        d = float(np.dot(main_axis, cam.optical_axis_world))
        if d > best_dot:
            best_dot = d
            best = i
    return best


def _gt_color(gt: np.ndarray, pixel: np.ndarray) -> np.ndarray:
    h, w = gt.shape[:2]
    x = min(max(int(round(float(pixel[0]))), 0), w - 1)
    y = min(max(int(round(float(pixel[1]))), 0), h - 1)
    return gt[y, x]


def classify_error(
    ellipse: ErrorEllipse,
    main_camera: Camera,
    main_gt: np.ndarray,
    comp_camera: Camera,
    comp_gt: np.ndarray,
    comp_render: RenderOutput,
    samples: list[tuple[tuple[int, int], float]],
    config: CorrectionConfig,
) -> Diagnosis:
    """Decide whether an ellipse marks missing geometry or an occluder.

    Probes are backprojected from the main view and checked in the
    comparison view; a probe counts as visible there when the comparison
    render has enough alpha at its projection and agrees with the probe's
    depth to within the relative tolerance.  The classification compares
    the main ground-truth color at the ellipse center against the
    comparison ground truth at each visible probe (L-infinity).
    """
    if not samples:
        return Diagnosis(kind=SKIPPED, ellipse=ellipse, skip_reason=REASON_INVALID_DEPTH)

    c_main = _gt_color(main_gt, ellipse.center)
    h, w = comp_render.depth.shape

    center = ellipse.center
    center_sample = min(
        samples,
        key=lambda s: (s[0][0] - center[0]) ** 2 + (s[0][1] - center[1]) ** 2,
    )
    center_point = backproject_pixel(np.array(center_sample[0], dtype=np.float64), center_sample[1], main_camera)

    best_diff = math.inf
    best: tuple[np.ndarray, tuple[int, int], float] | None = None
    any_reached_visibility = False
    for (px, py), z in samples:
        p_world = backproject_pixel(np.array([px, py], dtype=np.float64), z, main_camera)
        uv, z_comp = project_point(p_world, comp_camera)
        if not math.isfinite(uv[0]):
            continue
        ix = int(round(float(uv[0])))
        iy = int(round(float(uv[1])))
        if ix < 0 or ix >= w or iy < 0 or iy >= h:
            continue
        any_reached_visibility = True
        if comp_render.alpha[iy, ix] < config.visibility_alpha:
            continue
        comp_depth = comp_render.depth[iy, ix]
        if not math.isfinite(comp_depth):
            continue
        if abs(comp_depth - z_comp) > config.depth_tolerance * z_comp:
            continue
        diff = float(np.max(np.abs(c_main - comp_gt[iy, ix])))
        if diff < best_diff:
            best_diff = diff
            best = (p_world, (px, py), z)

    if best is None:
        reason = REASON_NOT_VISIBLE if any_reached_visibility else REASON_OUT_OF_FRAME
        return Diagnosis(kind=SKIPPED, ellipse=ellipse, skip_reason=reason, center_point=center_point)

    kind = LACKING_SPLAT if best_diff < config.delta_rgb else OCCLUSION
    return Diagnosis(
        kind=kind,
        ellipse=ellipse,
        min_color_diff=best_diff,
        best_point=best[0],
        best_pixel=np.array(best[1], dtype=np.float64),
        best_depth=best[2],
        center_point=center_point,
    )


def _nearest_splat(scene: Scene, point: np.ndarray, t: float) -> int:
    best = -1
    best_d = math.inf
    for i in range(len(scene.splats)):
        pos = splat_world_pose(scene, i, t).position
        d = float(np.sum((pos - point) ** 2))
        if d < best_d:
            best_d = d
            best = i
    return best


def _world_axes_rotation(
    ellipse: ErrorEllipse, depth: float, camera: Camera
) -> tuple[np.ndarray, float, float]:
    """World rotation matrix aligned with the ellipse axes, plus world semi-axes."""
    c = ellipse.center
    a, b = float(ellipse.semi_axes[0]), float(ellipse.semi_axes[1])
    phi = ellipse.angle
    e1_px = c + a * np.array([math.cos(phi), math.sin(phi)])
    e2_px = c + b * np.array([-math.sin(phi), math.cos(phi)])
    pc = backproject_pixel(c, depth, camera)
    u1 = backproject_pixel(e1_px, depth, camera) - pc
    u2 = backproject_pixel(e2_px, depth, camera) - pc
    a_w = float(np.linalg.norm(u1))
    b_w = float(np.linalg.norm(u2))
    v1 = u1 / a_w
    v2 = u2 - float(np.dot(u2, v1)) * v1
    v2 = v2 / float(np.linalg.norm(v2))
    v3 = np.cross(v1, v2)
    return np.column_stack([v1, v2, v3]), a_w, b_w


def backproject_add(scene: Scene, diagnosis: Diagnosis, main_camera: Camera, t: float) -> int:
    """Insert a new splat for a LackingSplat diagnosis; returns its index.

    The splat sits at the matched probe point, shaped and oriented like
    the ellipse lifted to that depth, colored with the cluster's
    representative color, and attached to the nearest existing splat's
    group with a relative pose derived through the inverse group
    transform.  It is dynamic with a temporal window centered on t.
    """
    if diagnosis.kind != LACKING_SPLAT:
        raise ValueError(f"expected a {LACKING_SPLAT} diagnosis, got {diagnosis.kind}")
    point = diagnosis.best_point
    rot_world, a_w, b_w = _world_axes_rotation(diagnosis.ellipse, diagnosis.best_depth, main_camera)
    q_world = quat.from_matrix(rot_world)

    anchor = _nearest_splat(scene, point, t)
    group_id = scene.splats[anchor].group_id if anchor >= 0 else 0
    group = scene.groups[group_id]
    if group.is_static:
        rel_pos = point.copy()
        rel_rot = q_world
    else:
        gp = group_position(group, t)
        gr = group_rotation(group, t)
        rel_pos = quat.to_matrix(gr).T @ (point - gp)
        rel_rot = quat.normalize(quat.multiply(quat.conjugate(gr), q_world))

    interval = group.keyframe_interval
    splat = Splat(
        position=rel_pos,
        rotation=rel_rot,
        scale=np.array([a_w, b_w, 0.01 * min(a_w, b_w)]),
        opacity=min(max(1.0 - diagnosis.min_color_diff, 0.0), 1.0),
        color=np.clip(diagnosis.ellipse.representative_color, 0.0, 1.0),
        displacement=np.zeros(3),
        group_id=group_id,
        is_dynamic=True,
        opacity_center=np.array([t, t]),
        opacity_variance=np.array([interval / 2.0, interval / 2.0]),
    )
    scene.splats.append(splat)
    return len(scene.splats) - 1


def foreground_split(
    scene: Scene, diagnosis: Diagnosis, main_camera: Camera, t: float
) -> tuple[int, tuple[int, int]]:
    """Split the occluding splat in two along its major axis.

    The target is the splat nearest to the probed world point at the
    ellipse center.  Both children keep the parent's group, rotation,
    color, opacity, displacement and temporal window; their scales shrink
    by the split factor and their centers move to +- half the parent's
    major standard deviation along the major axis.  The first child takes
    the parent's slot so other indices stay stable; the second is
    appended.  Returns (parent index, (child indices)).
    """
    if diagnosis.kind != OCCLUSION:
        raise ValueError(f"expected an {OCCLUSION} diagnosis, got {diagnosis.kind}")
    if diagnosis.center_point is None:
        raise ValueError("diagnosis carries no probed center point")
    parent_idx = _nearest_splat(scene, diagnosis.center_point, t)
    parent = scene.splats[parent_idx]

    axis = int(np.argmax(parent.scale))
    sigma_major = float(parent.scale[axis])
    local_dir = np.zeros(3)
    local_dir[axis] = 1.0
    dir_rel = quat.to_matrix(parent.rotation) @ local_dir
    offset = dir_rel * (sigma_major / 2.0)

    child_scale = parent.scale / SPLIT_SCALE_FACTOR

    first = parent.copy()
    first.position = parent.position + offset
    first.scale = child_scale.copy()
    second = parent.copy()
    second.position = parent.position - offset
    second.scale = child_scale.copy()

    scene.splats[parent_idx] = first
    scene.splats.append(second)
    return parent_idx, (parent_idx, len(scene.splats) - 1)


@dataclass
class PassReport:
    view: int
    comparison_view: int
    frame: int
    added: int = 0
    split: int = 0
    skipped: dict[str, int] = field(default_factory=dict)
    added_indices: list[int] = field(default_factory=list)
    split_parent_indices: list[int] = field(default_factory=list)
    ellipses: int = 0
    splats_before: int = 0
    splats_after: int = 0
    before_l1: float = 0.0
    after_l1: float = 0.0


def correction_pass(
    scene: Scene,
    cameras: list[Camera],
    main_index: int,
    comparison_index: int,
    t: int,
    gt_sequences: list[list[np.ndarray]],
    config: CorrectionConfig,
    threads: int = 1,
) -> PassReport:
    """One full correction pass on a single (view, frame) pair.

    gt_sequences[v][f] is the ground-truth image for camera v at frame f.
    Error pixels and depth probes are taken from one render snapshot and
    processed largest ellipse first (ties by center raster order), so the
    pass is deterministic even though it mutates the scene as it goes.
    The scene is mutated in place; the report carries the bookkeeping.
    """
    main_camera = cameras[main_index]
    comp_camera = cameras[comparison_index]
    gt_main = gt_sequences[main_index]
    gt_comp = gt_sequences[comparison_index]

    report = PassReport(
        view=main_index,
        comparison_view=comparison_index,
        frame=t,
        splats_before=len(scene.splats),
    )

    main_render = render(scene, main_camera, float(t), threads=threads)
    report.before_l1 = float(np.abs(main_render.rgb - gt_main[t]).mean())

    dyn = compute_dynamicity(
        gt_main[t],
        gt_main[t - 1] if t - 1 >= 0 else None,
        gt_main[t + 1] if t + 1 < scene.num_frames else None,
    )
    pixels = select_error_pixels(main_render.rgb, gt_main[t], dyn, config.cluster)
    ellipses = cluster_errors(pixels, config.cluster)
    width = main_camera.width

    def raster_key(e: ErrorEllipse) -> tuple:
        return (
            -e.member_count,
            round(float(e.center[1])) * width + round(float(e.center[0])),
        )

    ellipses.sort(key=raster_key)
    report.ellipses = len(ellipses)

    comp_render = render(scene, comp_camera, float(t), threads=threads)

    for ellipse in ellipses:
        samples = sample_depths(main_render, ellipse.center, config.kernel_n)
        diag = classify_error(
            ellipse, main_camera, gt_main[t], comp_camera, gt_comp[t], comp_render, samples, config
        )
        if diag.kind == LACKING_SPLAT:
            idx = backproject_add(scene, diag, main_camera, float(t))
            report.added += 1
            report.added_indices.append(idx)
        elif diag.kind == OCCLUSION:
            parent_idx, _children = foreground_split(scene, diag, main_camera, float(t))
            report.split += 1
            report.split_parent_indices.append(parent_idx)
        else:
            report.skipped[diag.skip_reason] = report.skipped.get(diag.skip_reason, 0) + 1

    report.splats_after = len(scene.splats)
    after_render = render(scene, main_camera, float(t), threads=threads)
    report.after_l1 = float(np.abs(after_render.rgb - gt_main[t]).mean())
    return report
