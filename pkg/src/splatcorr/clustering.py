"""Error-pixel selection and elliptical error clustering.

The pipeline locates image regions where a render disagrees with ground
truth, restricted to temporally active pixels, and condenses them into
elliptical clusters a single splat could plausibly fix:

  1. pixel selection by dynamicity, absolute error and an error quantile
  2. spatial DBSCAN to form coarse blobs
  3. per blob, DBSCAN over (x, y, scaled rgb) to separate color layers
  4. ellipse fit: minimum-area rectangle of the convex hull (rotating
     calipers), inscribed ellipse, fill-ratio acceptance
  5. rejected clusters are split in two by k-means and recursed

All of it is deterministic: points are visited in index order, neighbor
lists are sorted, and every tie-break is written down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusterConfig:
    dynamicity_threshold: float = 0.05
    abs_error_threshold: float = 0.05
    rel_error_quantile: float = 0.5
    eps_spatial: float = 2.0
    min_pts: int = 4
    color_scale: float = 50.0
    fill_ratio_threshold: float = 0.8
    min_cluster_size: int = 8
    max_split_depth: int = 12


@dataclass
class ErrorPixel:
    x: int
    y: int
    error: float              # mean-channel absolute error
    gt_color: np.ndarray      # (3,)


@dataclass
class ErrorEllipse:
    center: np.ndarray        # (2,) pixel coordinates
    semi_axes: np.ndarray     # (2,), major first
    angle: float              # radians, direction of the major axis
    fill_ratio: float
    representative_color: np.ndarray  # (3,)
    members: list[ErrorPixel] = field(default_factory=list)

    @property
    def member_count(self) -> int:
        return len(self.members)


class DegenerateClusterError(ValueError):
    """Raised when a cluster is collinear and spans no area."""


def compute_dynamicity(
    gt_curr: np.ndarray,
    gt_prev: np.ndarray | None = None,
    gt_next: np.ndarray | None = None,
) -> np.ndarray:
    """Per-pixel temporal activity of the ground truth.

    The dynamicity of a pixel is the larger channel-summed L1 difference
    against the two temporal neighbors; at sequence boundaries the
    missing neighbor simply drops out.  With no neighbor at all the
    result is zero everywhere.
    """
    gt_curr = np.asarray(gt_curr, dtype=np.float64)
    out = np.zeros(gt_curr.shape[:2])
    for other in (gt_prev, gt_next):
        if other is None:
            continue
        diff = np.abs(np.asarray(other, dtype=np.float64) - gt_curr).sum(axis=2)
        np.maximum(out, diff, out=out)
    return out


def select_error_pixels(
    render: np.ndarray,
    gt: np.ndarray,
    dynamicity: np.ndarray,
    config: ClusterConfig,
) -> list[ErrorPixel]:
    """Pixels that are temporally active and render wrong.

    Keeps pixels with dynamicity strictly above the threshold, then among
    those the ones whose mean-channel absolute error exceeds the absolute
    threshold and sits in the top rel_error_quantile of the active set
    (nearest-rank on the descending sort, ties kept).  Output is in
    raster order.
    """
    render = np.asarray(render, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    error = np.abs(render - gt).mean(axis=2)
    active = dynamicity > config.dynamicity_threshold
    if not np.any(active):
        return []
    active_errors = error[active]
    k = math.ceil(config.rel_error_quantile * len(active_errors))
    if k <= 0:
        return []
    cutoff = np.sort(active_errors)[::-1][k - 1]
    keep = active & (error > config.abs_error_threshold) & (error >= cutoff)
    ys, xs = np.nonzero(keep)
    return [
        ErrorPixel(x=int(x), y=int(y), error=float(error[y, x]), gt_color=gt[y, x].copy())
        for y, x in zip(ys, xs)
    ]


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Plain DBSCAN with Euclidean metric and deterministic labeling.

    Points are visited in index order and neighbor lists kept sorted, so
    the labels (0..k-1, noise -1) depend only on the input.  A point is a
    core point when its closed eps-ball holds at least min_pts points,
    itself included.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    eps2 = eps * eps
    neighbors = [np.nonzero(d2[i] <= eps2)[0] for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbors])

    visited = np.zeros(n, dtype=bool)
    cluster = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        # Breadth-first expansion from the lowest-index unvisited core point.
        labels[i] = cluster
        visited[i] = True
        frontier = list(neighbors[i])
        while frontier:
            j = frontier.pop(0)
            if labels[j] == -1:
                labels[j] = cluster
            if visited[j]:
                continue
            visited[j] = True
            if core[j]:
                for nb in neighbors[j]:
                    if not visited[nb] or labels[nb] == -1:
                        frontier.append(int(nb))
        cluster += 1
    return labels


def spatial_color_cluster(pixels: list[ErrorPixel], config: ClusterConfig) -> list[list[ErrorPixel]]:
    """DBSCAN in the 5-D joint space (x, y, scaled ground-truth rgb).

    Noise is dropped; clusters come back ordered by label.
    """
    if not pixels:
        return []
    feats = np.array(
        [
            [p.x, p.y, *(config.color_scale * p.gt_color)]
            for p in pixels
        ]
    )
    labels = dbscan(feats, config.eps_spatial, config.min_pts)
    return _split_by_label(pixels, labels)


def _split_by_label(pixels: list[ErrorPixel], labels: np.ndarray) -> list[list[ErrorPixel]]:
    out: list[list[ErrorPixel]] = []
    for lab in range(int(labels.max()) + 1 if len(labels) else 0):
        members = [p for p, l in zip(pixels, labels) if l == lab]
        if members:
            out.append(members)
    return out


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise, no repeated endpoint."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def min_area_rectangle(hull: np.ndarray) -> tuple[np.ndarray, float, float, float]:
    """Minimum-area bounding rectangle of a convex polygon.

    Rotating calipers: the optimal rectangle has one side collinear with
    a hull edge, so every edge direction is tried.  Returns (center,
    width, height, angle) with width measured along the angle direction.
    """
    if len(hull) < 3:
        raise DegenerateClusterError("hull spans no area")
    best = None
    n = len(hull)
    for i in range(n):
        edge = hull[(i + 1) % n] - hull[i]
        norm = float(np.hypot(edge[0], edge[1]))
        if norm == 0.0:
            continue
        ux, uy = edge[0] / norm, edge[1] / norm
        proj_u = hull @ np.array([ux, uy])
        proj_v = hull @ np.array([-uy, ux])
        w = float(proj_u.max() - proj_u.min())
        h = float(proj_v.max() - proj_v.min())
        area = w * h
        if best is None or area < best[0] - 1e-12:
            cu = (proj_u.max() + proj_u.min()) / 2.0
            cv = (proj_v.max() + proj_v.min()) / 2.0
            center = cu * np.array([ux, uy]) + cv * np.array([-uy, ux])
            best = (area, center, w, h, math.atan2(uy, ux))
    if best is None or best[0] <= 0.0:
        raise DegenerateClusterError("hull spans no area")
    _, center, w, h, angle = best
    return center, w, h, angle


def _ellipse_axes(center: np.ndarray, a: float, b: float, angle: float):
    e1 = np.array([math.cos(angle), math.sin(angle)])
    e2 = np.array([-math.sin(angle), math.cos(angle)])
    return e1 / a, e2 / b


def rasterized_ellipse_area(center: np.ndarray, a: float, b: float, angle: float) -> int:
    """Number of integer pixel centers inside the ellipse."""
    r = math.ceil(max(a, b))
    x0, y0 = int(math.floor(center[0] - r)), int(math.floor(center[1] - r))
    x1, y1 = int(math.ceil(center[0] + r)), int(math.ceil(center[1] + r))
    xs = np.arange(x0, x1 + 1)
    ys = np.arange(y0, y1 + 1)
    gx, gy = np.meshgrid(xs, ys)
    d = np.stack([gx - center[0], gy - center[1]], axis=-1)
    u1, u2 = _ellipse_axes(center, a, b, angle)
    q = (d @ u1) ** 2 + (d @ u2) ** 2
    return int(np.count_nonzero(q <= 1.0))


def fit_ellipse(pixels: list[ErrorPixel]) -> ErrorEllipse:
    """Inscribed ellipse of the cluster's minimum-area bounding rectangle.

    The rectangle is computed on pixel centers and inflated by half a
    pixel per side before inscribing the ellipse.  fill_ratio is the
    number of member pixels inside the ellipse over the rasterized
    ellipse area.  Collinear clusters raise DegenerateClusterError.
    """
    pts = np.array([[p.x, p.y] for p in pixels], dtype=np.float64)
    hull = convex_hull(pts)
    center, w, h, angle = min_area_rectangle(hull)
    a = w / 2.0 + 0.5
    b = h / 2.0 + 0.5
    if a < b:
        a, b = b, a
        angle += math.pi / 2.0
    angle = angle % math.pi
    u1, u2 = _ellipse_axes(center, a, b, angle)
    d = pts - center
    inside = ((d @ u1) ** 2 + (d @ u2) ** 2) <= 1.0
    area = rasterized_ellipse_area(center, a, b, angle)
    if area == 0:
        raise DegenerateClusterError("ellipse rasterizes to no pixels")
    fill = float(np.count_nonzero(inside)) / float(area)
    dist2 = (d * d).sum(axis=1)
    rep = pixels[int(np.argmin(dist2))]
    return ErrorEllipse(
        center=center,
        semi_axes=np.array([a, b]),
        angle=float(angle),
        fill_ratio=fill,
        representative_color=rep.gt_color.copy(),
        members=list(pixels),
    )


def kmeans_split(pixels: list[ErrorPixel]) -> tuple[list[ErrorPixel], list[ErrorPixel]]:
    """Two-way k-means on pixel coordinates, farthest-pair initialization.

    Lloyd iterations run until assignments stop changing, at most 100.
    Both halves are guaranteed non-empty.
    """
    if len(pixels) < 2:
        raise ValueError("cannot split fewer than two pixels")
    pts = np.array([[p.x, p.y] for p in pixels], dtype=np.float64)
    n = len(pts)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    best_pair = (0, 1)
    best_d = -1.0
    for i in range(n):
        for j in range(i + 1, n):
            if d2[i, j] > best_d:
                best_d = d2[i, j]
                best_pair = (i, j)
    centers = np.array([pts[best_pair[0]], pts[best_pair[1]]])
    assign = None
    for _ in range(100):
        da = ((pts - centers[0]) ** 2).sum(axis=1)
        db = ((pts - centers[1]) ** 2).sum(axis=1)
        new_assign = (db < da).astype(np.int64)
        if not np.any(new_assign == 1):
            new_assign[int(np.argmax(da))] = 1
        elif not np.any(new_assign == 0):
            new_assign[int(np.argmax(db))] = 0
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        centers = np.array([pts[assign == 0].mean(axis=0), pts[assign == 1].mean(axis=0)])
    first = [p for p, a in zip(pixels, assign) if a == 0]
    second = [p for p, a in zip(pixels, assign) if a == 1]
    return first, second


def cluster_errors(pixels: list[ErrorPixel], config: ClusterConfig) -> list[ErrorEllipse]:
    """Full recursive clustering of selected error pixels.

    Coarse spatial DBSCAN first; each blob is then refined with
    spatial-color DBSCAN, ellipse-fitted, and split in two and recursed
    while the fill ratio stays below the acceptance threshold.  Noise and
    clusters below the minimum size are dropped, as is anything still
    unresolved at the split-depth cap.
    """
    if not pixels:
        return []
    coords = np.array([[p.x, p.y] for p in pixels], dtype=np.float64)
    labels = dbscan(coords, config.eps_spatial, config.min_pts)
    accepted: list[ErrorEllipse] = []
    for blob in _split_by_label(pixels, labels):
        _refine(blob, config, 0, accepted)
    return accepted


def _refine(pixels: list[ErrorPixel], config: ClusterConfig, depth: int, out: list[ErrorEllipse]):
    if len(pixels) < config.min_cluster_size:
        return
    for cluster in spatial_color_cluster(pixels, config):
        if len(cluster) < config.min_cluster_size:
            continue
        try:
            ellipse = fit_ellipse(cluster)
        except DegenerateClusterError:
            ellipse = None
        if ellipse is not None and ellipse.fill_ratio >= config.fill_ratio_threshold:
            out.append(ellipse)
            continue
        if depth >= config.max_split_depth or len(cluster) < 2:
            continue
        first, second = kmeans_split(cluster)
        _refine(first, config, depth + 1, out)
        _refine(second, config, depth + 1, out)
