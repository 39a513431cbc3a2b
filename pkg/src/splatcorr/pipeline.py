"""End-to-end orchestration: synthesize, degrade, correct, measure.

run_pipeline drives the whole flow from one validated config:

  1. generate the scene and cameras, render clean ground truth
  2. apply the configured degradations
  3. optionally discover and split displacement groups
  4. run correction passes, cycling the main view over cameras and the
     target frame (starting mid-sequence) over frames
  5. score the degraded and corrected scenes against ground truth

report.json is fully deterministic for a given config: the echoed config
drops output_dir and threads, and wall-clock timings go to a separate
timings.json so byte-identical reruns stay byte-identical.
"""

from __future__ import annotations

import dataclasses
import time
from pathlib import Path

import numpy as np

from .config import validate_config
from .correction import ClusterConfig, CorrectionConfig, correction_pass, select_comparison_view
from .grouping import build_displacement_graph, connected_components, select_split_timestamp, split_group
from .images import image_path, write_pfm, write_ppm
from .metrics import sequence_report
from .render import render
from .scene import Scene, validate_scene
from .serialization import FORMAT_VERSION, save_json, save_scene
from .synth import SynthSpec, degrade, gen_scene


def correction_config_from(cfg: dict) -> CorrectionConfig:
    c = cfg["correction"]
    return CorrectionConfig(
        delta_rgb=c["delta_rgb"],
        kernel_n=c["kernel_n"],
        depth_tolerance=c["depth_tolerance"],
        visibility_alpha=c["visibility_alpha"],
        cluster=ClusterConfig(
            dynamicity_threshold=c["dynamicity_threshold"],
            abs_error_threshold=c["abs_error_threshold"],
            rel_error_quantile=c["rel_error_quantile"],
            eps_spatial=c["eps_spatial"],
            min_pts=c["min_pts"],
            color_scale=c["color_scale"],
            fill_ratio_threshold=c["fill_ratio_threshold"],
            min_cluster_size=c["min_cluster_size"],
            max_split_depth=c["max_split_depth"],
        ),
    )


def synth_spec_from(cfg: dict) -> SynthSpec:
    s = cfg["synth"]
    return SynthSpec(
        seed=cfg["seed"],
        n_splats=s["n_splats"],
        motion=s["motion"],
        extent=s["extent"],
        n_cameras=s["n_cameras"],
        n_frames=s["n_frames"],
        width=s["width"],
        height=s["height"],
        keyframe_interval=s["keyframe_interval"],
    )


def _render_sequences(scene: Scene, cameras, threads: int):
    """Float RGB renders for every camera and frame: [view][frame]."""
    out = []
    for camera in cameras:
        frames = []
        for t in range(scene.num_frames):
            frames.append(render(scene, camera, float(t), threads=threads))
        out.append(frames)
    return out


def _write_image_set(directory: Path, outputs) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for v, frames in enumerate(outputs):
        for t, result in enumerate(frames):
            write_ppm(image_path(directory, v, t), result.rgb)
            write_pfm(image_path(directory, v, t, depth=True), result.depth)


def run_pipeline(raw_config: dict, output_dir: str | None = None) -> dict:
    """Run the full flow; returns the report dict after writing artifacts.

    output_dir overrides the config's directory (the CLI uses this).
    """
    cfg = validate_config(raw_config)
    out_dir = Path(output_dir if output_dir is not None else cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = cfg["threads"]
    timings: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    spec = synth_spec_from(cfg)
    clean_scene, cameras = gen_scene(spec)
    timings["synth"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    gt_outputs = _render_sequences(clean_scene, cameras, threads)
    gt_images = [[o.rgb for o in frames] for frames in gt_outputs]
    timings["ground_truth"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    scene, degrade_records = degrade(clean_scene, cfg["degrade"], seed=cfg["seed"] + 1)
    timings["degrade"] = time.perf_counter() - t0

    problems = validate_scene(scene)
    if problems:
        raise ValueError(f"degraded scene failed validation: {problems[:3]}")
    save_scene(out_dir / "scene_degraded.json", scene)
    degraded_count = len(scene.splats)

    t0 = time.perf_counter()
    before_outputs = _render_sequences(scene, cameras, threads)
    before_metrics = [
        dataclasses.asdict(
            sequence_report([o.rgb for o in frames], gt_images[v])
        )
        for v, frames in enumerate(before_outputs)
    ]
    timings["metrics_before"] = time.perf_counter() - t0

    group_split_report = None
    t0 = time.perf_counter()
    if cfg["group_split"]["enabled"]:
        g = cfg["group_split"]
        timestamp = select_split_timestamp(scene, cameras, gt_images, threads=threads)
        group_split_report = {"timestamp": timestamp, "groups": []}
        for group_id in range(len(scene.groups)):
            graph = build_displacement_graph(
                scene,
                group_id,
                float(timestamp),
                displacement_cutoff=g["displacement_cutoff"],
                direction_threshold=g["direction_threshold"],
                opacity_threshold=g["opacity_threshold"],
            )
            components = connected_components(graph)
            for comp in components:
                if len(comp) < g["min_component_size"]:
                    continue
                new_id = split_group(scene, group_id, comp, float(timestamp))
                group_split_report["groups"].append(
                    {"source_group": group_id, "new_group": new_id, "members": comp}
                )
    timings["group_split"] = time.perf_counter() - t0

    correction_cfg = correction_config_from(cfg)
    passes = []
    n_views = len(cameras)
    n_frames = scene.num_frames
    t0 = time.perf_counter()
    for k in range(cfg["correction"]["passes"]):
        main = k % n_views
        comp = select_comparison_view(cameras, main)
        frame = (n_frames // 2 + k // n_views) % n_frames
        report = correction_pass(
            scene, cameras, main, comp, frame, gt_images, correction_cfg, threads=threads
        )
        passes.append(dataclasses.asdict(report))
    timings["correction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    after_outputs = _render_sequences(scene, cameras, threads)
    after_metrics = [
        dataclasses.asdict(
            sequence_report([o.rgb for o in frames], gt_images[v])
        )
        for v, frames in enumerate(after_outputs)
    ]
    timings["metrics_after"] = time.perf_counter() - t0

    if cfg["write_images"]:
        t0 = time.perf_counter()
        _write_image_set(out_dir / "gt", gt_outputs)
        _write_image_set(out_dir / "before", before_outputs)
        _write_image_set(out_dir / "after", after_outputs)
        timings["write_images"] = time.perf_counter() - t0

    save_scene(out_dir / "scene_final.json", scene)

    echoed = {k: v for k, v in cfg.items() if k not in ("output_dir", "threads")}
    report = {
        "version": FORMAT_VERSION,
        "config": echoed,
        "splat_counts": {
            "clean": len(clean_scene.splats),
            "degraded": degraded_count,
            "final": len(scene.splats),
        },
        "degrade": degrade_records,
        "group_split": group_split_report,
        "passes": passes,
        "metrics": {"before": before_metrics, "after": after_metrics},
    }
    save_json(out_dir / "report.json", report)

    timings["total"] = time.perf_counter() - t_total
    save_json(out_dir / "timings.json", {k: round(v, 6) for k, v in timings.items()})
    return report
