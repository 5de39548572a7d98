"""Closed-form moire complexity scoring.

A patch's score is the product of two cheap statistics: colorfulness over
the opponent channels rg = R - G and yb = (R + G)/2 - B, and the mean
absolute response of a Gaussian high-pass filter on luminance. Colored
high-frequency content scores high; flat, grayscale, or smooth content
scores near zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image import as_image, extract, to_luminance

COLORFULNESS_MU_WEIGHT = 0.3


@dataclass(frozen=True)
class PriorConfig:
    """Scoring configuration.

    kernel_radius defaults to ceil(3 * gaussian_sigma). The mean-term
    weight of the colorfulness statistic is fixed at 0.3.
    """

    gaussian_sigma: float = 5.0
    kernel_radius: int = None
    colorfulness_mu_weight: float = COLORFULNESS_MU_WEIGHT

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise ValueError("gaussian_sigma must be positive")
        if self.kernel_radius is None:
            object.__setattr__(self, "kernel_radius", math.ceil(3 * self.gaussian_sigma))
        if self.kernel_radius < 1:
            raise ValueError("kernel_radius must be at least 1")
        if self.colorfulness_mu_weight != COLORFULNESS_MU_WEIGHT:
            raise ValueError(f"colorfulness_mu_weight is fixed at {COLORFULNESS_MU_WEIGHT}")


@dataclass(frozen=True)
class MoireScore:
    """Score components: score == colorfulness * frequency_mean."""

    colorfulness: float
    frequency_mean: float
    score: float


def gaussian_kernel_1d(sigma: float, radius: int) -> np.ndarray:
    """Normalized 1-D Gaussian taps exp(-i^2 / 2 sigma^2), i in [-radius, radius]."""
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _reflect_indices(n: int, radius: int) -> np.ndarray:
    """Source indices for mirror padding (edge sample not repeated)."""
    idx = np.arange(-radius, n + radius)
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def _correlate_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = (kernel.size - 1) // 2
    padded = np.take(arr, _reflect_indices(arr.shape[axis], radius), axis=axis)
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel.size, axis=axis)
    return windows @ kernel


def gaussian_blur(plane, sigma: float = 5.0, radius: int = None) -> np.ndarray:
    """Separable Gaussian blur of a single-channel plane with mirror padding."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a single-channel plane, got shape {arr.shape}")
    if radius is None:
        radius = math.ceil(3 * sigma)
    kernel = gaussian_kernel_1d(sigma, radius)
    return _correlate_axis(_correlate_axis(arr, kernel, axis=0), kernel, axis=1)


def colorfulness(patch) -> float:
    """Opponent-channel colorfulness: sqrt(var(rg)+var(yb)) + 0.3 sqrt(mean(rg)^2+mean(yb)^2).

    Variances are population variances (divide by pixel count), so the
    statistic is defined down to 1-pixel patches.
    """
    arr = as_image(patch)
    rg = arr[:, :, 0] - arr[:, :, 1]
    yb = 0.5 * (arr[:, :, 0] + arr[:, :, 1]) - arr[:, :, 2]
    sigma_term = math.sqrt(rg.var() + yb.var())
    mu_term = math.sqrt(rg.mean() ** 2 + yb.mean() ** 2)
    return sigma_term + COLORFULNESS_MU_WEIGHT * mu_term


def highpass(patch, cfg: PriorConfig = None) -> np.ndarray:
    """Absolute Gaussian high-pass response |L - blur(L)| of the luminance plane.

    The blur is anchored at the first sample (blur(L) computed as
    L0 + blur(L - L0)), which is mathematically a no-op but makes the
    response on constant patches exactly zero.
    """
    cfg = cfg or PriorConfig()
    lum = to_luminance(patch)
    anchor = lum.flat[0]
    blurred = anchor + gaussian_blur(lum - anchor, cfg.gaussian_sigma, cfg.kernel_radius)
    return np.abs(lum - blurred)


def moire_score(patch, cfg: PriorConfig = None) -> MoireScore:
    """Score a patch: colorfulness times mean high-pass response."""
    cfg = cfg or PriorConfig()
    c = colorfulness(patch)
    f_mean = float(highpass(patch, cfg).mean())
    return MoireScore(colorfulness=c, frequency_mean=f_mean, score=c * f_mean)


def score_grid(image, grid, cfg: PriorConfig = None) -> list:
    """Score every patch of the grid; result is index-aligned with grid entries."""
    arr = as_image(image)
    cfg = cfg or PriorConfig()
    return [moire_score(extract(arr, grid, i), cfg) for i in range(grid.n_patches)]
