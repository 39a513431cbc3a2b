"""Image quality metrics: PSNR, structural dissimilarity, temporal PSNR.

SSIM follows the common convention: 11x11 Gaussian window with sigma 1.5,
stabilizers C1 = (0.01 * data_range)^2 and C2 = (0.03 * data_range)^2,
computed per channel and averaged.  The window is applied in valid mode,
so only fully covered pixels enter the mean.

Temporal PSNR scores flicker: for every consecutive frame pair it takes
the PSNR between the signed temporal residual of the renders and that of
the ground truth, then averages over pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


@dataclass
class MetricReport:
    psnr: float
    dssim1: float
    dssim2: float
    tpsnr: float


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); identical inputs hit the 100 dB cap."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_kernel() -> np.ndarray:
    half = SSIM_WINDOW // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    return k / k.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a 1-D kernel."""
    n = len(kernel)
    h, w = img.shape
    out_w = w - n + 1
    rows = np.zeros((h, out_w))
    for i in range(n):
        rows += kernel[i] * img[:, i : i + out_w]
    out_h = h - n + 1
    out = np.zeros((out_h, out_w))
    for i in range(n):
        out += kernel[i] * rows[i : i + out_h, :]
    return out


def _ssim_channel(a: np.ndarray, b: np.ndarray, data_range: float) -> float:
    kernel = _gaussian_kernel()
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    mu_a = _filter_valid(a, kernel)
    mu_b = _filter_valid(b, kernel)
    var_a = _filter_valid(a * a, kernel) - mu_a * mu_a
    var_b = _filter_valid(b * b, kernel) - mu_b * mu_b
    cov = _filter_valid(a * b, kernel) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def dssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """(1 - mean SSIM) / 2, in [0, 1]. Inputs are (H, W) or (H, W, C)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim not in (2, 3):
        raise ValueError(f"expected 2 or 3 dimensions, got {a.ndim}")
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ValueError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    if a.ndim == 2:
        ssim = _ssim_channel(a, b, data_range)
    else:
        ssim = float(np.mean([_ssim_channel(a[..., c], b[..., c], data_range) for c in range(a.shape[2])]))
    return (1.0 - ssim) / 2.0


def sequence_report(renders, gts, peak: float = 1.0) -> MetricReport:
    """Aggregate metrics over a frame sequence.

    PSNR and both DSSIM variants (data ranges 1 and 2) are averaged over
    frames; temporal PSNR is computed across the whole sequence.
    """
    renders = np.asarray(renders, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    psnrs = [psnr(r, g, peak=peak) for r, g in zip(renders, gts)]
    d1 = [dssim(r, g, data_range=1.0) for r, g in zip(renders, gts)]
    d2 = [dssim(r, g, data_range=2.0) for r, g in zip(renders, gts)]
    return MetricReport(
        psnr=float(np.mean(psnrs)),
        dssim1=float(np.mean(d1)),
        dssim2=float(np.mean(d2)),
        tpsnr=tpsnr(renders, gts, peak=peak),
    )


def tpsnr(renders: np.ndarray, gts: np.ndarray, peak: float = 1.0) -> float:
    """Mean PSNR of signed temporal residuals over consecutive frame pairs.

    renders and gts are sequences shaped (T, H, W, C) with T >= 2.
    """
    renders = np.asarray(renders, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    if renders.shape != gts.shape:
        raise ValueError(f"shape mismatch {renders.shape} vs {gts.shape}")
    if len(renders) < 2:
        raise ValueError("temporal PSNR needs at least two frames")
    values = []
    for t in range(1, len(renders)):
        res_render = renders[t] - renders[t - 1]
        res_gt = gts[t] - gts[t - 1]
        values.append(psnr(res_render, res_gt, peak=peak))
    return float(np.mean(values))
