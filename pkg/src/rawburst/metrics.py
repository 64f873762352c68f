"""Fidelity metrics computed on linear sensor-space tensors.

Both metrics clamp their inputs to [0, 1] and use peak 1.0 by default,
matching evaluation in the raw linear space rather than on tone-mapped
previews.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .image_io import as_tensor3


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    a = as_tensor3(a)
    b = as_tensor3(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)


def _gaussian_window(size, sigma):
    x = np.arange(size) - (size - 1) / 2.0
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def ssim(a, b, window=11, sigma_w=1.5, k1=0.01, k2=0.03, peak=1.0):
    """Mean structural similarity with Gaussian-weighted local statistics.

    The score is averaged over all pixels with full window support and
    over channels.
    """
    a = as_tensor3(a)
    b = as_tensor3(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if min(a.shape[:2]) < window:
        raise ValueError(
            f"image {a.shape[0]}x{a.shape[1]} smaller than window {window}")
    kernel = _gaussian_window(window, sigma_w)
    pad = window // 2
    crop = np.s_[pad:a.shape[0] - pad, pad:a.shape[1] - pad]

    def local_mean(img):
        out = correlate1d(img, kernel, axis=0, mode="constant")
        return correlate1d(out, kernel, axis=1, mode="constant")[crop]

    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    scores = []
    for ch in range(a.shape[2]):
        x = a[..., ch]
        y = b[..., ch]
        mu_x = local_mean(x)
        mu_y = local_mean(y)
        var_x = local_mean(x * x) - mu_x ** 2
        var_y = local_mean(y * y) - mu_y ** 2
        cov = local_mean(x * y) - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
        den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
        scores.append(num / den)
    return float(np.mean(scores))


def evaluate(sr, gt, peak=1.0):
    """PSNR and SSIM of a reconstruction against ground truth, both
    computed on values clamped to [0, peak]."""
    sr = np.clip(as_tensor3(sr), 0.0, peak)
    gt = np.clip(as_tensor3(gt), 0.0, peak)
    return MetricReport(psnr=psnr(sr, gt, peak=peak),
                        ssim=ssim(sr, gt, peak=peak))
