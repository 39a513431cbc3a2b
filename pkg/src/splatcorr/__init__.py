"""Grouped dynamic Gaussian splat scenes with error-driven correction.

The package covers the full loop: synthetic scene generation, a CPU
forward renderer, displacement-based motion-group discovery, elliptical
error clustering against ground truth, cross-view diagnosis with
splat-level repairs, and image quality metrics, all deterministic.
"""

from .clustering import ClusterConfig, ErrorEllipse, ErrorPixel, cluster_errors
from .correction import CorrectionConfig, Diagnosis, correction_pass
from .metrics import MetricReport, dssim, psnr, tpsnr
from .render import RenderOutput, render
from .scene import Camera, Group, Scene, Splat, validate_scene
from .synth import SynthSpec, degrade, gen_scene
from .temporal import Pose, splat_world_pose

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "ClusterConfig",
    "CorrectionConfig",
    "Diagnosis",
    "ErrorEllipse",
    "ErrorPixel",
    "Group",
    "MetricReport",
    "Pose",
    "RenderOutput",
    "Scene",
    "Splat",
    "SynthSpec",
    "cluster_errors",
    "correction_pass",
    "degrade",
    "dssim",
    "gen_scene",
    "psnr",
    "render",
    "splat_world_pose",
    "tpsnr",
    "validate_scene",
    "__version__",
]
