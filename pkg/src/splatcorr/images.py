"""Binary image formats used for rendered artifacts.

RGB images travel as binary PPM (P6, maxval 255), storing linear values
without any gamma curve: a float in [0, 1] maps to round(v * 255).
Float images (depth, residuals) travel as single-channel PFM with a
negative scale, i.e. little-endian.  PFM stores rows bottom-to-top, as
the format prescribes; readers and writers here agree on that, so
round-trips preserve the in-memory top-down orientation.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np


def write_ppm(path: str | Path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) float image in [0, 1] as binary P6."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3), got {rgb.shape}")
    data = np.clip(np.round(rgb * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    """Read a binary P6 file back to (H, W, 3) floats in [0, 1]."""
    raw = Path(path).read_bytes()
    m = re.match(rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if not m:
        raise ValueError(f"{path}: not a binary PPM")
    w, h, maxval = int(m.group(1)), int(m.group(2)), int(m.group(3))
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pixels = np.frombuffer(raw[m.end():], dtype=np.uint8, count=w * h * 3)
    return pixels.reshape(h, w, 3).astype(np.float64) / 255.0


def write_pfm(path: str | Path, data: np.ndarray) -> None:
    """Write an (H, W) float image as little-endian grayscale PFM.

    NaNs pass through untouched; they mark pixels without a valid value.
    """
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2:
        raise ValueError(f"expected (H, W), got {data.shape}")
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        f.write(data[::-1].astype("<f4").tobytes())


def read_pfm(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    m = re.match(rb"(Pf|PF)\s+(\d+)\s+(\d+)\s+([-+0-9.eE]+)\s", raw)
    if not m:
        raise ValueError(f"{path}: not a PFM")
    kind = m.group(1)
    if kind != b"Pf":
        raise ValueError(f"{path}: only grayscale PFM is supported")
    w, h = int(m.group(2)), int(m.group(3))
    scale = float(m.group(4))
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(raw[m.end():], dtype=dtype, count=w * h)
    return data.reshape(h, w)[::-1].astype(np.float64)


def image_path(directory: str | Path, view: int, frame: int, depth: bool = False) -> Path:
    """Canonical artifact file name for a (view, frame) image."""
    suffix = "_depth.pfm" if depth else ".ppm"
    return Path(directory) / f"view{view}_frame{frame}{suffix}"


def encode_unit(rgb: np.ndarray) -> np.ndarray:
    """Quantize to the 8-bit grid the PPM writer uses (for exact goldens)."""
    if not np.all(np.isfinite(rgb)):
        raise ValueError("cannot encode non-finite values")
    return np.clip(np.round(np.asarray(rgb) * 255.0), 0, 255) / 255.0


def finite_or(data: np.ndarray, fill: float = math.nan) -> np.ndarray:
    out = np.array(data, dtype=np.float64)
    out[~np.isfinite(out)] = fill
    return out
