"""Command-line interface.

Every stage of the pipeline is exposed as a subcommand working on the
JSON / PPM / PFM artifacts, so stages can be scripted and inspected
independently.  Exit codes: 0 success, 2 configuration problem (bad
flags, bad config file), 3 data problem (missing or malformed inputs).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import cluster_errors, compute_dynamicity, select_error_pixels
from .config import DEFAULT_CONFIG, ConfigError, validate_config
from .correction import correction_pass, select_comparison_view
from .grouping import build_displacement_graph, connected_components, select_split_timestamp, split_group
from .images import image_path, read_ppm, write_pfm, write_ppm
from .metrics import sequence_report
from .pipeline import correction_config_from, run_pipeline, synth_spec_from
from .render import render
from .scene import validate_camera, validate_scene
from .serialization import (
    DataError,
    ellipses_to_dict,
    load_cameras,
    load_scene,
    save_cameras,
    save_json,
    save_scene,
)
from .synth import degrade, gen_scene

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _load_config(path: str | None, overrides: dict) -> dict:
    raw = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError("", f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"config file is not valid JSON: {exc}")
    for dotted, value in overrides.items():
        if value is None:
            continue
        section = raw
        parts = dotted.split(".")
        for part in parts[:-1]:
            section = section.setdefault(part, {})
        section[parts[-1]] = value
    return validate_config(raw)


def _correction_overrides(args) -> dict:
    keys = [
        "delta_rgb", "kernel_n", "depth_tolerance", "visibility_alpha",
        "dynamicity_threshold", "abs_error_threshold", "rel_error_quantile",
        "eps_spatial", "min_pts", "color_scale", "fill_ratio_threshold",
        "min_cluster_size", "max_split_depth",
    ]
    return {f"correction.{k}": getattr(args, k) for k in keys}


def _add_correction_flags(parser: argparse.ArgumentParser) -> None:
    c = DEFAULT_CONFIG["correction"]
    parser.add_argument("--delta-rgb", type=float, default=None, help=f"color agreement bound (default {c['delta_rgb']})")
    parser.add_argument("--kernel-n", type=int, default=None, help=f"depth probe window size (default {c['kernel_n']})")
    parser.add_argument("--depth-tolerance", type=float, default=None, help=f"relative depth tolerance (default {c['depth_tolerance']})")
    parser.add_argument("--visibility-alpha", type=float, default=None, help=f"comparison alpha bound (default {c['visibility_alpha']})")
    parser.add_argument("--dynamicity-threshold", type=float, default=None, help=f"default {c['dynamicity_threshold']}")
    parser.add_argument("--abs-error-threshold", type=float, default=None, help=f"default {c['abs_error_threshold']}")
    parser.add_argument("--rel-error-quantile", type=float, default=None, help=f"default {c['rel_error_quantile']}")
    parser.add_argument("--eps-spatial", type=float, default=None, help=f"DBSCAN radius in px (default {c['eps_spatial']})")
    parser.add_argument("--min-pts", type=int, default=None, help=f"DBSCAN core size (default {c['min_pts']})")
    parser.add_argument("--color-scale", type=float, default=None, help=f"rgb weight in clustering (default {c['color_scale']})")
    parser.add_argument("--fill-ratio-threshold", type=float, default=None, help=f"ellipse acceptance (default {c['fill_ratio_threshold']})")
    parser.add_argument("--min-cluster-size", type=int, default=None, help=f"default {c['min_cluster_size']}")
    parser.add_argument("--max-split-depth", type=int, default=None, help=f"default {c['max_split_depth']}")


def _load_gt_images(directory: str, n_views: int, n_frames: int) -> list[list[np.ndarray]]:
    root = Path(directory)
    if not root.is_dir():
        raise DataError(f"{root}: ground-truth directory not found")
    out = []
    for v in range(n_views):
        frames = []
        for t in range(n_frames):
            path = image_path(root, v, t)
            if not path.exists():
                raise DataError(f"{path}: missing ground-truth image")
            frames.append(read_ppm(path))
        out.append(frames)
    return out


def _check_scene(scene) -> None:
    problems = validate_scene(scene)
    if problems:
        raise DataError("invalid scene: " + "; ".join(problems[:5]))


def _check_cameras(cameras) -> None:
    for i, cam in enumerate(cameras):
        problems = validate_camera(cam)
        if problems:
            raise DataError(f"invalid camera {i}: " + "; ".join(problems))


def _cmd_synth(args) -> int:
    cfg = _load_config(args.config, {
        "seed": args.seed,
        "synth.n_splats": args.n_splats,
        "synth.motion": args.motion,
        "synth.extent": args.extent,
        "synth.n_cameras": args.n_cameras,
        "synth.n_frames": args.n_frames,
        "synth.width": args.width,
        "synth.height": args.height,
        "threads": args.threads,
    })
    scene, cameras = gen_scene(synth_spec_from(cfg))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_scene(out / "scene.json", scene)
    save_cameras(out / "cameras.json", cameras)
    gt_dir = out / "gt"
    gt_dir.mkdir(exist_ok=True)
    for v, camera in enumerate(cameras):
        for t in range(scene.num_frames):
            result = render(scene, camera, float(t), threads=cfg["threads"])
            write_ppm(image_path(gt_dir, v, t), result.rgb)
            write_pfm(image_path(gt_dir, v, t, depth=True), result.depth)
    print(f"wrote scene with {len(scene.splats)} splats, {len(cameras)} cameras to {out}")
    return EXIT_OK


def _cmd_degrade(args) -> int:
    scene = load_scene(args.scene)
    _check_scene(scene)
    try:
        ops = [json.loads(op) for op in args.op]
    except json.JSONDecodeError as exc:
        raise ConfigError("degrade", f"op is not valid JSON: {exc}")
    cfg = _load_config(args.config, {"degrade": ops} if ops else {})
    degraded, records = degrade(scene, cfg["degrade"], seed=args.seed)
    save_scene(args.out, degraded)
    print(json.dumps({"ops": records, "splats": len(degraded.splats)}))
    return EXIT_OK


def _cmd_render(args) -> int:
    scene = load_scene(args.scene)
    cameras = load_cameras(args.cameras)
    _check_scene(scene)
    _check_cameras(cameras)
    if not 0 <= args.view < len(cameras):
        raise DataError(f"view {args.view} out of range [0, {len(cameras)})")
    if not 0 <= args.frame < scene.num_frames:
        raise DataError(f"frame {args.frame} out of range [0, {scene.num_frames})")
    result = render(scene, cameras[args.view], float(args.frame), threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ppm(image_path(out, args.view, args.frame), result.rgb)
    write_pfm(image_path(out, args.view, args.frame, depth=True), result.depth)
    print(f"wrote {image_path(out, args.view, args.frame)}")
    return EXIT_OK


def _cmd_cluster(args) -> int:
    cfg = _load_config(args.config, {**_correction_overrides(args), "threads": args.threads})
    scene = load_scene(args.scene)
    cameras = load_cameras(args.cameras)
    _check_scene(scene)
    _check_cameras(cameras)
    if not 0 <= args.view < len(cameras):
        raise DataError(f"view {args.view} out of range [0, {len(cameras)})")
    gt = _load_gt_images(args.gt, len(cameras), scene.num_frames)
    t = args.frame
    if not 0 <= t < scene.num_frames:
        raise DataError(f"frame {t} out of range [0, {scene.num_frames})")
    result = render(scene, cameras[args.view], float(t), threads=cfg["threads"])
    dyn = compute_dynamicity(
        gt[args.view][t],
        gt[args.view][t - 1] if t > 0 else None,
        gt[args.view][t + 1] if t + 1 < scene.num_frames else None,
    )
    cc = correction_config_from(cfg)
    pixels = select_error_pixels(result.rgb, gt[args.view][t], dyn, cc.cluster)
    ellipses = cluster_errors(pixels, cc.cluster)
    save_json(args.out, ellipses_to_dict(ellipses))
    print(f"{len(pixels)} error pixels, {len(ellipses)} ellipses -> {args.out}")
    return EXIT_OK


def _cmd_correct(args) -> int:
    cfg = _load_config(args.config, {**_correction_overrides(args), "threads": args.threads})
    scene = load_scene(args.scene)
    cameras = load_cameras(args.cameras)
    _check_scene(scene)
    _check_cameras(cameras)
    if not 0 <= args.view < len(cameras):
        raise DataError(f"view {args.view} out of range [0, {len(cameras)})")
    comp = args.comparison
    if comp is None:
        comp = select_comparison_view(cameras, args.view)
    elif not 0 <= comp < len(cameras) or comp == args.view:
        raise DataError(f"comparison view {comp} invalid for main view {args.view}")
    if not 0 <= args.frame < scene.num_frames:
        raise DataError(f"frame {args.frame} out of range [0, {scene.num_frames})")
    gt = _load_gt_images(args.gt, len(cameras), scene.num_frames)
    report = correction_pass(
        scene, cameras, args.view, comp, args.frame, gt,
        correction_config_from(cfg), threads=cfg["threads"],
    )
    save_scene(args.out, scene)
    payload = {
        "view": report.view,
        "comparison_view": report.comparison_view,
        "frame": report.frame,
        "added": report.added,
        "split": report.split,
        "skipped": report.skipped,
        "before_l1": report.before_l1,
        "after_l1": report.after_l1,
    }
    if args.report is not None:
        save_json(args.report, payload)
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_group_split(args) -> int:
    cfg = _load_config(args.config, {
        "group_split.direction_threshold": args.direction_threshold,
        "group_split.displacement_cutoff": args.displacement_cutoff,
        "group_split.opacity_threshold": args.opacity_threshold,
        "group_split.min_component_size": args.min_component_size,
        "threads": args.threads,
    })
    scene = load_scene(args.scene)
    cameras = load_cameras(args.cameras)
    _check_scene(scene)
    _check_cameras(cameras)
    gt = _load_gt_images(args.gt, len(cameras), scene.num_frames)
    g = cfg["group_split"]
    timestamp = select_split_timestamp(scene, cameras, gt, threads=cfg["threads"])
    splits = []
    for group_id in range(len(scene.groups)):
        graph = build_displacement_graph(
            scene, group_id, float(timestamp),
            displacement_cutoff=g["displacement_cutoff"],
            direction_threshold=g["direction_threshold"],
            opacity_threshold=g["opacity_threshold"],
        )
        for comp in connected_components(graph):
            if len(comp) < g["min_component_size"]:
                continue
            new_id = split_group(scene, group_id, comp, float(timestamp))
            splits.append({"source_group": group_id, "new_group": new_id, "members": comp})
    save_scene(args.out, scene)
    print(json.dumps({"timestamp": timestamp, "splits": splits}))
    return EXIT_OK


def _cmd_metrics(args) -> int:
    a_dir, b_dir = Path(args.render_dir), Path(args.gt_dir)
    for d in (a_dir, b_dir):
        if not d.is_dir():
            raise DataError(f"{d}: directory not found")
    views = sorted({int(p.name.split("_")[0][4:]) for p in a_dir.glob("view*_frame*.ppm")})
    if not views:
        raise DataError(f"{a_dir}: no view*_frame*.ppm images found")
    per_view = {}
    for v in views:
        frames = sorted(
            int(p.stem.split("frame")[1]) for p in a_dir.glob(f"view{v}_frame*.ppm")
        )
        renders = [read_ppm(image_path(a_dir, v, t)) for t in frames]
        gts = []
        for t in frames:
            path = image_path(b_dir, v, t)
            if not path.exists():
                raise DataError(f"{path}: missing reference image")
            gts.append(read_ppm(path))
        report = sequence_report(renders, gts)
        per_view[str(v)] = {
            "psnr": report.psnr, "dssim1": report.dssim1,
            "dssim2": report.dssim2, "tpsnr": report.tpsnr,
        }
    payload = {"version": 1, "views": per_view}
    if args.out is not None:
        save_json(args.out, payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    overrides = {
        "seed": args.seed,
        "threads": args.threads,
        "correction.passes": args.passes,
        "group_split.enabled": args.group_split,
        **_correction_overrides(args),
    }
    cfg = _load_config(args.config, overrides)
    report = run_pipeline(cfg, output_dir=args.out)
    counts = report["splat_counts"]
    print(
        f"pipeline done: {counts['degraded']} -> {counts['final']} splats, "
        f"report at {Path(args.out or cfg['output_dir']) / 'report.json'}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splatcorr",
        description="Synthesize, degrade, diagnose and repair splat scenes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a scene, cameras and ground truth")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-splats", type=int, default=None)
    p.add_argument("--motion", default=None)
    p.add_argument("--extent", type=float, default=None)
    p.add_argument("--n-cameras", type=int, default=None)
    p.add_argument("--n-frames", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("degrade", help="apply degradation ops to a scene")
    p.add_argument("--config", default=None)
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--op", action="append", default=[], help="JSON op object, repeatable")
    p.set_defaults(func=_cmd_degrade)

    p = sub.add_parser("render", help="render one view and frame")
    p.add_argument("--scene", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--view", type=int, required=True)
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("cluster", help="find error ellipses for one view and frame")
    p.add_argument("--config", default=None)
    p.add_argument("--scene", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--gt", required=True, help="directory with ground-truth images")
    p.add_argument("--view", type=int, required=True)
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    _add_correction_flags(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("correct", help="run one correction pass")
    p.add_argument("--config", default=None)
    p.add_argument("--scene", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--view", type=int, required=True)
    p.add_argument("--comparison", type=int, default=None)
    p.add_argument("--frame", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--threads", type=int, default=None)
    _add_correction_flags(p)
    p.set_defaults(func=_cmd_correct)

    p = sub.add_parser("group-split", help="discover and split displacement groups")
    p.add_argument("--config", default=None)
    p.add_argument("--scene", required=True)
    p.add_argument("--cameras", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--direction-threshold", type=float, default=None)
    p.add_argument("--displacement-cutoff", type=float, default=None)
    p.add_argument("--opacity-threshold", type=float, default=None)
    p.add_argument("--min-component-size", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_group_split)

    p = sub.add_parser("metrics", help="score a render directory against a reference")
    p.add_argument("--render-dir", required=True)
    p.add_argument("--gt-dir", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("pipeline", help="run the full synthesize/degrade/correct flow")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--passes", type=int, default=None)
    p.add_argument("--group-split", action="store_const", const=True, default=None)
    _add_correction_flags(p)
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
