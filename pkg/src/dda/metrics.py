"""Full-reference image quality metrics: PSNR, SSIM, and CIEDE2000."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import as_image, srgb_to_lab, to_luminance
from .prior import gaussian_kernel_1d

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricResult:
    psnr_db: float
    ssim: float
    delta_e: float


def _check_same_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB with peak 1.0; +inf for identical inputs."""
    x, y = as_image(a), as_image(b)
    _check_same_dims(x, y)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _windowed_mean(plane: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Weighted window means at every fully-interior window position."""
    view = np.lib.stride_tricks.sliding_window_view(plane, window.shape)
    return np.einsum("ijkl,kl->ij", view, window)


def ssim(a, b) -> float:
    """Mean structural similarity on luminance.

    Uses an 11x11 Gaussian window (sigma 1.5) over valid window positions,
    K1=0.01, K2=0.03, dynamic range 1. Images smaller than the window fall
    back to a single uniform window covering the whole image.
    """
    x, y = as_image(a), as_image(b)
    _check_same_dims(x, y)
    lx, ly = to_luminance(x), to_luminance(y)
    h, w = lx.shape
    if min(h, w) >= _SSIM_WINDOW:
        taps = gaussian_kernel_1d(_SSIM_SIGMA, (_SSIM_WINDOW - 1) // 2)
        window = np.outer(taps, taps)
    else:
        window = np.full((h, w), 1.0 / (h * w))
    mu_x = _windowed_mean(lx, window)
    mu_y = _windowed_mean(ly, window)
    cov_xy = _windowed_mean(lx * ly, window) - mu_x * mu_y
    var_x = _windowed_mean(lx * lx, window) - mu_x * mu_x
    var_y = _windowed_mean(ly * ly, window) - mu_y * mu_y
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    numerator = (2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)
    denominator = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(numerator / denominator))


def ciede2000(lab1, lab2):
    """CIEDE2000 color difference, kL = kC = kH = 1.

    Accepts single (L, a, b) triples or arrays of them with the channel
    axis last; broadcasting follows numpy rules. Returns a scalar for
    triples, an array otherwise.
    """
    p = np.asarray(lab1, dtype=np.float64)
    q = np.asarray(lab2, dtype=np.float64)
    if p.shape[-1] != 3 or q.shape[-1] != 3:
        raise ValueError("expected Lab values with a trailing axis of size 3")
    l1, a1, b1 = p[..., 0], p[..., 1], p[..., 2]
    l2, a2, b2 = q[..., 0], q[..., 1], q[..., 2]

    c_mean = 0.5 * (np.hypot(a1, b1) + np.hypot(a2, b2))
    g = 0.5 * (1.0 - np.sqrt(c_mean**7 / (c_mean**7 + 25.0**7)))
    ap1, ap2 = (1.0 + g) * a1, (1.0 + g) * a2
    cp1, cp2 = np.hypot(ap1, b1), np.hypot(ap2, b2)
    hp1 = np.degrees(np.arctan2(b1, ap1)) % 360.0
    hp2 = np.degrees(np.arctan2(b2, ap2)) % 360.0

    chroma_zero = cp1 * cp2 == 0.0
    dhp = hp2 - hp1
    dhp = np.where(dhp > 180.0, dhp - 360.0, dhp)
    dhp = np.where(dhp < -180.0, dhp + 360.0, dhp)
    dhp = np.where(chroma_zero, 0.0, dhp)
    d_l = l2 - l1
    d_c = cp2 - cp1
    d_h = 2.0 * np.sqrt(cp1 * cp2) * np.sin(np.radians(0.5 * dhp))

    l_mean = 0.5 * (l1 + l2)
    cp_mean = 0.5 * (cp1 + cp2)
    h_sum = hp1 + hp2
    h_gap = np.abs(hp1 - hp2)
    h_mean = np.where(
        h_gap > 180.0,
        np.where(h_sum < 360.0, 0.5 * (h_sum + 360.0), 0.5 * (h_sum - 360.0)),
        0.5 * h_sum,
    )
    h_mean = np.where(chroma_zero, h_sum, h_mean)

    t = (
        1.0
        - 0.17 * np.cos(np.radians(h_mean - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * h_mean))
        + 0.32 * np.cos(np.radians(3.0 * h_mean + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * h_mean - 63.0))
    )
    s_l = 1.0 + 0.015 * (l_mean - 50.0) ** 2 / np.sqrt(20.0 + (l_mean - 50.0) ** 2)
    s_c = 1.0 + 0.045 * cp_mean
    s_h = 1.0 + 0.015 * cp_mean * t
    rotation = -2.0 * np.sqrt(cp_mean**7 / (cp_mean**7 + 25.0**7)) * np.sin(
        np.radians(60.0 * np.exp(-(((h_mean - 275.0) / 25.0) ** 2)))
    )
    delta = np.sqrt(
        (d_l / s_l) ** 2
        + (d_c / s_c) ** 2
        + (d_h / s_h) ** 2
        + rotation * (d_c / s_c) * (d_h / s_h)
    )
    return float(delta) if delta.ndim == 0 else delta


def delta_e_image(a, b) -> float:
    """Mean per-pixel CIEDE2000 between two sRGB images."""
    x, y = as_image(a), as_image(b)
    _check_same_dims(x, y)
    return float(np.mean(ciede2000(srgb_to_lab(x), srgb_to_lab(y))))


def compare(a, b) -> MetricResult:
    """All three metrics between a test image and its reference."""
    return MetricResult(psnr_db=psnr(a, b), ssim=ssim(a, b), delta_e=delta_e_image(a, b))
