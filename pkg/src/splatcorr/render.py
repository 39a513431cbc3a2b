"""CPU forward renderer for splat scenes.

Splats are projected to screen-space Gaussians with the classic EWA-style
first-order approximation: the world covariance R diag(s^2) R^T is pushed
through the camera rotation W and the pinhole Jacobian J, giving the 2x2
screen covariance J W Sigma W^T J^T.  A small isotropic regularizer
(0.3 px^2) is added so degenerate splats stay at least a pixel wide.

Compositing is standard front-to-back alpha blending over splats sorted by
camera depth (ties broken by splat index, stable):

    C(p) = sum_i T_i * alpha_i * c_i,   T_i = prod_{j<i} (1 - alpha_j)

with alpha_i = min(0.99, opacity * exp(-0.5 d^T Sigma'^-1 d)) and
contributions below 1/255 skipped.  Depth is alpha-blended the same way
and normalized by the accumulated alpha; pixels whose accumulated alpha
stays below 0.5 carry no reliable surface and get NaN depth.

Each splat is only evaluated inside the axis-aligned bounding box of its
3-sigma screen ellipse; everything outside is exactly zero.

The optional thread pool splits the image into horizontal bands.  Bands
are disjoint and every pixel sees the same splats in the same order, so
the output is bit-identical for any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import quat
from .scene import Camera, Scene
from .temporal import effective_opacity, splat_world_pose

NEAR_PLANE = 1e-3
ALPHA_CLAMP = 0.99
CONTRIBUTION_CUTOFF = 1.0 / 255.0
COV2D_REGULARIZATION = 0.3
DEPTH_ALPHA_THRESHOLD = 0.5
BBOX_SIGMAS = 3.0


@dataclass
class ProjectedSplat:
    mean2d: np.ndarray       # (2,) pixel coordinates
    cov2d: np.ndarray        # (2, 2) screen covariance, regularized
    camera_depth: float
    color: np.ndarray        # (3,)
    opacity: float           # effective opacity at the render time


@dataclass
class RenderOutput:
    rgb: np.ndarray          # (H, W, 3) in [0, 1]
    depth: np.ndarray        # (H, W), NaN where no valid surface
    alpha: np.ndarray        # (H, W) accumulated alpha

    @property
    def depth_valid(self) -> np.ndarray:
        return self.alpha >= DEPTH_ALPHA_THRESHOLD


def build_covariance(rotation: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """World covariance R diag(scale^2) R^T of a splat's local Gaussian."""
    r = quat.to_matrix(rotation)
    return r @ np.diag(np.asarray(scale, dtype=np.float64) ** 2) @ r.T


def project_point(point: np.ndarray, camera: Camera) -> tuple[np.ndarray, float]:
    """Pixel coordinates and camera depth of a world point.

    The caller decides what to do with points at or behind the near
    plane; the depth is returned either way and the pixel coordinates are
    NaN when the point cannot be projected.
    """
    p_cam = camera.rotation @ np.asarray(point, dtype=np.float64) + camera.translation
    z = float(p_cam[2])
    if z <= NEAR_PLANE:
        return np.array([math.nan, math.nan]), z
    u = camera.fx * p_cam[0] / z + camera.cx
    v = camera.fy * p_cam[1] / z + camera.cy
    return np.array([u, v]), z


def backproject_pixel(pixel: np.ndarray, depth: float, camera: Camera) -> np.ndarray:
    """World point that projects to the given pixel at the given camera depth."""
    if depth <= 0:
        raise ValueError(f"backprojection needs positive depth, got {depth}")
    u, v = float(pixel[0]), float(pixel[1])
    x = (u - camera.cx) * depth / camera.fx
    y = (v - camera.cy) * depth / camera.fy
    p_cam = np.array([x, y, depth])
    return camera.rotation.T @ (p_cam - camera.translation)


def project_splat(
    position: np.ndarray,
    covariance: np.ndarray,
    color: np.ndarray,
    opacity: float,
    camera: Camera,
) -> ProjectedSplat | None:
    """Screen-space Gaussian of one splat, or None when culled.

    Culling only rejects splats at or behind the near plane; off-screen
    splats are kept and simply never touch a pixel.
    """
    w = camera.rotation
    p_cam = w @ np.asarray(position, dtype=np.float64) + camera.translation
    z = float(p_cam[2])
    if z <= NEAR_PLANE:
        return None
    x, y = float(p_cam[0]), float(p_cam[1])
    jac = np.array(
        [
            [camera.fx / z, 0.0, -camera.fx * x / (z * z)],
            [0.0, camera.fy / z, -camera.fy * y / (z * z)],
        ]
    )
    cov_cam = w @ covariance @ w.T
    cov2d = jac @ cov_cam @ jac.T
    cov2d = cov2d + COV2D_REGULARIZATION * np.eye(2)
    mean2d = np.array([camera.fx * x / z + camera.cx, camera.fy * y / z + camera.cy])
    return ProjectedSplat(
        mean2d=mean2d,
        cov2d=cov2d,
        camera_depth=z,
        color=np.asarray(color, dtype=np.float64),
        opacity=float(opacity),
    )


def _composite_band(
    projected: list[ProjectedSplat],
    windows: list[tuple[int, int, int, int]],
    row0: int,
    row1: int,
    width: int,
    rgb: np.ndarray,
    depth_sum: np.ndarray,
    alpha_sum: np.ndarray,
):
    """Front-to-back blending of all splats over rows [row0, row1)."""
    transmittance = np.ones((row1 - row0, width))
    for splat, (x0, x1, y0, y1) in zip(projected, windows):
        y0 = max(y0, row0)
        y1 = min(y1, row1)
        if y0 >= y1 or x0 >= x1:
            continue
        det = splat.cov2d[0, 0] * splat.cov2d[1, 1] - splat.cov2d[0, 1] * splat.cov2d[1, 0]
        if det <= 0:
            continue
        inv_a = splat.cov2d[1, 1] / det
        inv_b = -splat.cov2d[0, 1] / det
        inv_c = splat.cov2d[0, 0] / det
        dx = np.arange(x0, x1) - splat.mean2d[0]
        dy = np.arange(y0, y1) - splat.mean2d[1]
        dxg = dx[None, :]
        dyg = dy[:, None]
        power = -0.5 * (inv_a * dxg * dxg + inv_c * dyg * dyg) - inv_b * dxg * dyg
        alpha = splat.opacity * np.exp(power)
        np.minimum(alpha, ALPHA_CLAMP, out=alpha)
        alpha[alpha < CONTRIBUTION_CUTOFF] = 0.0
        ys = slice(y0 - row0, y1 - row0)
        xs = slice(x0, x1)
        weight = transmittance[ys, xs] * alpha
        rgb[ys, xs] += weight[:, :, None] * splat.color
        depth_sum[ys, xs] += weight * splat.camera_depth
        alpha_sum[ys, xs] += weight
        transmittance[ys, xs] *= 1.0 - alpha


def render(scene: Scene, camera: Camera, t: float, threads: int = 1) -> RenderOutput:
    """Render the scene at time t against a black background.

    Args:
        scene: scene to draw.
        camera: viewpoint and intrinsics.
        t: time in frames; dynamic groups must cover it.
        threads: horizontal bands rendered concurrently; the result is
            identical for every value.

    Returns:
        RenderOutput with linear RGB, blended depth (NaN where invalid)
        and accumulated alpha.
    """
    h, w = camera.height, camera.width
    projected: list[ProjectedSplat] = []
    for i in range(len(scene.splats)):
        splat = scene.splats[i]
        pose = splat_world_pose(scene, i, t)
        cov = build_covariance(pose.rotation, splat.scale)
        ps = project_splat(pose.position, cov, splat.color, effective_opacity(splat, t), camera)
        if ps is not None:
            projected.append(ps)

    # Depth sort, stable so equal depths keep splat order.
    order = np.argsort([p.camera_depth for p in projected], kind="stable")
    projected = [projected[i] for i in order]

    windows = []
    for p in projected:
        rx = BBOX_SIGMAS * math.sqrt(max(p.cov2d[0, 0], 0.0))
        ry = BBOX_SIGMAS * math.sqrt(max(p.cov2d[1, 1], 0.0))
        x0 = max(int(math.floor(p.mean2d[0] - rx)), 0)
        x1 = min(int(math.ceil(p.mean2d[0] + rx)) + 1, w)
        y0 = max(int(math.floor(p.mean2d[1] - ry)), 0)
        y1 = min(int(math.ceil(p.mean2d[1] + ry)) + 1, h)
        windows.append((x0, x1, y0, y1))

    rgb = np.zeros((h, w, 3))
    depth_sum = np.zeros((h, w))
    alpha_sum = np.zeros((h, w))

    threads = max(1, int(threads))
    if threads == 1 or h < 2 * threads:
        _composite_band(projected, windows, 0, h, w, rgb, depth_sum, alpha_sum)
    else:
        bounds = [round(b * h / threads) for b in range(threads + 1)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = []
            for b in range(threads):
                r0, r1 = bounds[b], bounds[b + 1]
                if r0 == r1:
                    continue
                futures.append(
                    pool.submit(
                        _composite_band,
                        projected,
                        windows,
                        r0,
                        r1,
                        w,
                        rgb[r0:r1],
                        depth_sum[r0:r1],
                        alpha_sum[r0:r1],
                    )
                )
            for f in futures:
                f.result()

    depth = np.full((h, w), math.nan)
    valid = alpha_sum >= DEPTH_ALPHA_THRESHOLD
    depth[valid] = depth_sum[valid] / alpha_sum[valid]
    return RenderOutput(rgb=rgb, depth=depth, alpha=alpha_sum)
