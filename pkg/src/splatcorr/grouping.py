"""Displacement-driven discovery and splitting of motion groups.

Splats whose linear displacement is large form the nodes of a graph;
two nodes connect when their world positions nearly touch (distance
strictly below the sum of their effective sizes) and their displacement
directions agree (cosine at or above a threshold).  Connected components
of that graph are coherent rigid movers and get promoted into new groups
whose trajectory absorbs the shared motion, with every member re-posed so
world poses at keyframe times are unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quat
from .render import render
from .scene import Camera, Group, Scene
from .temporal import effective_opacity, splat_world_pose


@dataclass
class DisplacementGraph:
    nodes: list[int]                    # splat indices, ascending
    edges: list[tuple[int, int]]        # (i, j) with i < j, lexicographic


def effective_size(sigma_max: float, opacity: float, threshold: float) -> float:
    """Radius where a Gaussian of peak `opacity` falls to `threshold`.

    Zero when the peak never reaches the threshold.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    if opacity <= threshold:
        return 0.0
    return sigma_max * math.sqrt(2.0 * math.log(opacity / threshold))


def build_displacement_graph(
    scene: Scene,
    group_id: int,
    t: float,
    displacement_cutoff: float | None = None,
    direction_threshold: float = 0.9,
    opacity_threshold: float = 0.05,
) -> DisplacementGraph:
    """Graph over a group's strongly displaced splats at time t.

    The default displacement cutoff is three times the group's median
    displacement norm.  Splats with exactly zero displacement never
    become nodes since their direction is undefined.
    """
    member_ids = [i for i, s in enumerate(scene.splats) if s.group_id == group_id]
    norms = {i: float(np.linalg.norm(scene.splats[i].displacement)) for i in member_ids}
    if displacement_cutoff is None:
        displacement_cutoff = 3.0 * float(np.median([norms[i] for i in member_ids])) if member_ids else 0.0
    nodes = [i for i in member_ids if norms[i] >= displacement_cutoff and norms[i] > 0.0]

    positions = {}
    sizes = {}
    for i in nodes:
        splat = scene.splats[i]
        positions[i] = splat_world_pose(scene, i, t).position
        sigma_max = float(np.max(splat.scale))
        sizes[i] = effective_size(sigma_max, effective_opacity(splat, t), opacity_threshold)

    edges: list[tuple[int, int]] = []
    for a in range(len(nodes)):
        i = nodes[a]
        di = scene.splats[i].displacement
        for b in range(a + 1, len(nodes)):
            j = nodes[b]
            dist = float(np.linalg.norm(positions[i] - positions[j]))
            if dist >= sizes[i] + sizes[j]:
                continue
            dj = scene.splats[j].displacement
            cosine = float(np.dot(di, dj)) / (norms[i] * norms[j])
            if cosine >= direction_threshold:
                edges.append((i, j))
    return DisplacementGraph(nodes=nodes, edges=edges)


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # Smaller index wins so roots are reproducible.
            if rj < ri:
                ri, rj = rj, ri
            self.parent[rj] = ri


def connected_components(graph: DisplacementGraph) -> list[list[int]]:
    """Components as sorted index lists, ordered by their smallest member."""
    uf = _UnionFind(graph.nodes)
    for i, j in graph.edges:
        uf.union(i, j)
    buckets: dict[int, list[int]] = {}
    for i in graph.nodes:
        buckets.setdefault(uf.find(i), []).append(i)
    comps = [sorted(v) for v in buckets.values()]
    comps.sort(key=lambda c: c[0])
    return comps


def select_split_timestamp(
    scene: Scene,
    cameras: list[Camera],
    gt_images: list[list[np.ndarray]],
    threads: int = 1,
) -> int:
    """Frame where the render deviates most from ground truth.

    gt_images[v][t] is the ground-truth RGB image of camera v at frame t.
    The score of a frame is the mean-L1 render error averaged over the
    given cameras; ties resolve to the smaller frame index.
    """
    if not cameras or not gt_images:
        raise ValueError("need at least one camera with ground truth")
    num_frames = scene.num_frames
    best_frame = 0
    best_score = -1.0
    for t in range(num_frames):
        score = 0.0
        for v, camera in enumerate(cameras):
            out = render(scene, camera, float(t), threads=threads)
            score += float(np.abs(out.rgb - gt_images[v][t]).mean())
        score /= len(cameras)
        if score > best_score:
            best_score = score
            best_frame = t
    return best_frame


def split_group(scene: Scene, group_id: int, member_indices: list[int], t: float) -> int:
    """Promote a component into its own dynamic group; returns the new group id.

    The member with the largest displacement norm (smallest index on
    ties) becomes the representative: the new group's keyframes are the
    representative's world poses at keyframe times, and every member's
    relative pose, displacement and temporal opacity are re-expressed so
    world poses at keyframe times are preserved.  The scene is mutated in
    place.

    The split time t only matters for bookkeeping symmetry with graph
    construction; keyframe poses are evaluated at the keyframe times
    themselves.
    """
    if not member_indices:
        raise ValueError("cannot split an empty member set")
    if not 0 <= group_id < len(scene.groups):
        raise ValueError(f"group {group_id} does not exist")
    old_group = scene.groups[group_id]
    for i in member_indices:
        if scene.splats[i].group_id != group_id:
            raise ValueError(f"splat {i} is not in group {group_id}")

    rep = member_indices[0]
    rep_norm = -1.0
    for i in sorted(member_indices):
        n = float(np.linalg.norm(scene.splats[i].displacement))
        if n > rep_norm:
            rep_norm = n
            rep = i

    interval = old_group.keyframe_interval
    horizon = max(scene.num_frames - 1, 1)
    num_key = max(2, int(math.ceil(horizon / interval)) + 1)

    rep_splat = scene.splats[rep]
    key_pos = np.zeros((num_key, 3))
    key_rot = np.zeros((num_key, 4))
    for k in range(num_key):
        tk = k * interval
        pose = splat_world_pose(scene, rep, tk)
        key_pos[k] = pose.position
        key_rot[k] = pose.rotation
    new_group = Group(
        keyframe_positions=key_pos,
        keyframe_rotations=key_rot,
        keyframe_interval=interval,
        is_static=False,
    )
    scene.groups.append(new_group)
    new_id = len(scene.groups) - 1

    rep_rel_pos = rep_splat.position.copy()
    rep_rel_rot = rep_splat.rotation.copy()
    rep_rel_disp = rep_splat.displacement.copy()
    rep_rot_inv = quat.to_matrix(rep_rel_rot).T
    rep_quat_inv = quat.conjugate(rep_rel_rot)

    end_time = float(scene.num_frames - 1)
    for i in sorted(member_indices):
        splat = scene.splats[i]
        if i == rep:
            splat.position = np.zeros(3)
            splat.rotation = np.array([1.0, 0.0, 0.0, 0.0])
            splat.displacement = np.zeros(3)
        else:
            splat.position = rep_rot_inv @ (splat.position - rep_rel_pos)
            splat.rotation = quat.normalize(quat.multiply(rep_quat_inv, splat.rotation))
            splat.displacement = splat.displacement - rep_rel_disp
        splat.group_id = new_id
        splat.is_dynamic = True
        splat.opacity_center = np.array([0.0, end_time])
        splat.opacity_variance = np.array([interval, interval])
    return new_id
