"""Quantitative comparison of disparity maps against ground truth.

All metrics are computed over the intersection of the two maps' valid
pixels; sentinel pixels are masked out rather than treated as zeros, so
adding mutually invalid pixels never changes a result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .image import as_disparity_map, valid_mask

DEFAULT_BMP_THRESHOLDS = (4.0, 6.0, 8.0, 10.0, 12.0)


@dataclass
class SsimParams:
    """Structural-similarity settings.

    window: side length of the uniform sliding window (stride 1).
    alpha/beta/gamma: exponents of the luminance, contrast and structure
        terms.
    dynamic_range: the value range L of the compared maps; the stabilizers
        are C1 = (k1*L)^2, C2 = (k2*L)^2, C3 = C2/2.
    """

    window: int = 8
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    dynamic_range: float = 75.0
    k1: float = 0.01
    k2: float = 0.03

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("ssim window must be >= 2")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be > 0")


@dataclass
class MetricReport:
    mse: float
    bmp_curve: list[tuple[float, float]]
    ssim: float
    runtime_ms: float
    valid_pixel_count: int
    normalized: bool

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "bmp_curve": [[t, p] for t, p in self.bmp_curve],
            "ssim": self.ssim,
            "runtime_ms": self.runtime_ms,
            "valid_pixel_count": self.valid_pixel_count,
            "normalized": self.normalized,
        }


def _mutual(estimate, truth) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    est = as_disparity_map(estimate)
    gt = as_disparity_map(truth)
    if est.shape != gt.shape:
        raise ValueError(f"map dimensions differ: {est.shape} vs {gt.shape}")
    mask = valid_mask(est) & valid_mask(gt)
    if not np.any(mask):
        raise ValueError("no mutually valid pixels to compare")
    return est, gt, mask


def mse(estimate, truth) -> float:
    """Mean squared difference over mutually valid pixels."""
    est, gt, mask = _mutual(estimate, truth)
    diff = est[mask].astype(np.float64) - gt[mask].astype(np.float64)
    return float(np.mean(diff * diff))


def bmp(estimate, truth, threshold: float) -> float:
    """Percentage of mutually valid pixels whose error strictly exceeds
    `threshold`."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    est, gt, mask = _mutual(estimate, truth)
    err = np.abs(est[mask].astype(np.float64) - gt[mask].astype(np.float64))
    return float(100.0 * np.count_nonzero(err > threshold) / err.size)


def bmp_curve(estimate, truth, thresholds=DEFAULT_BMP_THRESHOLDS) -> list[tuple[float, float]]:
    """BMP evaluated over a threshold sweep (non-increasing by construction)."""
    return [(float(t), bmp(estimate, truth, t)) for t in thresholds]


def ssim(estimate, truth, params: SsimParams | None = None) -> float:
    """Mean structural similarity over all fully valid sliding windows.

    Each w-by-w window yields l^alpha * c^beta * s^gamma computed from the
    window means, variances (population) and covariance; windows containing
    a sentinel in either map are skipped. Maps are expected to share the
    [0, dynamic_range] scale (normalize beforehand).
    """
    params = params or SsimParams()
    est, gt, _ = _mutual(estimate, truth)
    w = params.window
    height, width = est.shape
    if height < w or width < w:
        raise ValueError("maps are smaller than the ssim window")

    x = est.astype(np.float64)
    y = gt.astype(np.float64)
    win_x = np.lib.stride_tricks.sliding_window_view(x, (w, w)).reshape(
        height - w + 1, width - w + 1, -1
    )
    win_y = np.lib.stride_tricks.sliding_window_view(y, (w, w)).reshape(
        height - w + 1, width - w + 1, -1
    )
    complete = ~np.any(win_x < 0, axis=2) & ~np.any(win_y < 0, axis=2)
    if not np.any(complete):
        raise ValueError("no complete valid window for ssim")
    wx = win_x[complete]
    wy = win_y[complete]
    mu_x = wx.mean(axis=1)
    mu_y = wy.mean(axis=1)
    var_x = (wx * wx).mean(axis=1) - mu_x * mu_x
    var_y = (wy * wy).mean(axis=1) - mu_y * mu_y
    cov = (wx * wy).mean(axis=1) - mu_x * mu_y
    sigma_x = np.sqrt(np.maximum(var_x, 0.0))
    sigma_y = np.sqrt(np.maximum(var_y, 0.0))

    big_l = params.dynamic_range
    c1 = (params.k1 * big_l) ** 2
    c2 = (params.k2 * big_l) ** 2
    c3 = c2 / 2.0
    lum = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
    con = (2.0 * sigma_x * sigma_y + c2) / (var_x + var_y + c2)
    stru = (cov + c3) / (sigma_x * sigma_y + c3)
    values = (
        np.power(lum, params.alpha)
        * np.power(con, params.beta)
        * np.power(stru, params.gamma)
    )
    return float(values.mean())


def time_method(runner):
    """Run `runner()` once and return (its result, wall-clock milliseconds)."""
    start = time.perf_counter()
    result = runner()
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return result, elapsed_ms


def compute_report(
    estimate,
    truth,
    thresholds=DEFAULT_BMP_THRESHOLDS,
    ssim_params: SsimParams | None = None,
    runtime_ms: float = 0.0,
    normalized: bool = False,
) -> MetricReport:
    """Bundle all metrics for one estimate/ground-truth pair."""
    est, gt, mask = _mutual(estimate, truth)
    return MetricReport(
        mse=mse(est, gt),
        bmp_curve=bmp_curve(est, gt, thresholds),
        ssim=ssim(est, gt, ssim_params),
        runtime_ms=runtime_ms,
        valid_pixel_count=int(mask.sum()),
        normalized=normalized,
    )
