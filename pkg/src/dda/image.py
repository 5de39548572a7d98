"""Image representation, PNG I/O, patch geometry, and color conversions.

Images are numpy float64 arrays shaped [height, width, 3] with sRGB-encoded
samples in [0, 1], channels in R, G, B order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import cv2
import numpy as np

try:
    cv2.setLogLevel(0)  # keep codec warnings for corrupt files off stderr
except AttributeError:
    pass


class PngError(Exception):
    """Base class for PNG decoding problems."""


class UnsupportedPngError(PngError):
    """The file decoded, but not to 8/16-bit RGB or RGBA samples."""


class CorruptPngError(PngError):
    """The file exists but the PNG stream could not be decoded."""


def as_image(image) -> np.ndarray:
    """Validate and return the input as a float64 [H, W, 3] array."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an array shaped [height, width, 3], got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must contain at least one pixel")
    return arr


def load_png(path) -> np.ndarray:
    """Load an 8- or 16-bit RGB/RGBA PNG as float64 samples in [0, 1].

    Alpha is discarded. Samples are divided by the bit-depth maximum
    (255 or 65535).
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such image file: {path}")
    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise CorruptPngError(f"could not decode PNG stream: {path}")
    if raw.ndim != 3 or raw.shape[2] not in (3, 4):
        raise UnsupportedPngError(
            f"expected RGB or RGBA samples, got array shape {raw.shape}: {path}"
        )
    if raw.dtype == np.uint8:
        peak = 255.0
    elif raw.dtype == np.uint16:
        peak = 65535.0
    else:
        raise UnsupportedPngError(f"unsupported sample type {raw.dtype}: {path}")
    rgb = raw[:, :, 2::-1]  # BGR(A) -> RGB, alpha dropped
    return np.ascontiguousarray(rgb, dtype=np.float64) / peak


def save_png(image, path) -> None:
    """Write an 8-bit RGB PNG; samples are clamped to [0, 1] then rounded.

    Sample s maps to the byte floor(clamp(s) * 255 + 0.5) (round half up).
    """
    arr = as_image(image)
    quantized = np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    ok = cv2.imwrite(os.fspath(path), np.ascontiguousarray(quantized[:, :, ::-1]))
    if not ok:
        raise OSError(f"could not write PNG: {path}")


@dataclass(frozen=True)
class PatchGrid:
    """Tiling geometry binding patch indices to image regions.

    Entries are (origin_row, origin_col, height, width) tuples in row-major
    order by origin; edge entries may be smaller than the nominal patch size.
    """

    image_height: int
    image_width: int
    patch_height: int
    patch_width: int
    entries: tuple

    @property
    def n_patches(self) -> int:
        return len(self.entries)


def split(image, patch_height: int, patch_width: int) -> PatchGrid:
    """Tile the image into patches of at most the given size.

    Remainder tiles at the right/bottom edges keep their true (smaller)
    dimensions; no padding is applied. Patch dims larger than the image
    yield a single tile covering the whole image.
    """
    arr = as_image(image)
    if patch_height < 1 or patch_width < 1:
        raise ValueError("patch dimensions must be positive")
    h, w = arr.shape[:2]
    entries = tuple(
        (r, c, min(patch_height, h - r), min(patch_width, w - c))
        for r in range(0, h, patch_height)
        for c in range(0, w, patch_width)
    )
    return PatchGrid(h, w, patch_height, patch_width, entries)


def _check_grid(arr: np.ndarray, grid: PatchGrid) -> None:
    if (grid.image_height, grid.image_width) != arr.shape[:2]:
        raise ValueError(
            f"grid is for a {grid.image_height}x{grid.image_width} image, "
            f"got {arr.shape[0]}x{arr.shape[1]}"
        )


def extract(image, grid: PatchGrid, index: int) -> np.ndarray:
    """Copy out the pixels of patch `index` as a standalone image."""
    arr = as_image(image)
    _check_grid(arr, grid)
    if not 0 <= index < grid.n_patches:
        raise IndexError(f"patch index {index} out of range for {grid.n_patches} patches")
    r, c, th, tw = grid.entries[index]
    return arr[r : r + th, c : c + tw].copy()


def concat(grid: PatchGrid, patches) -> np.ndarray:
    """Reassemble a full image by writing each patch at its grid origin.

    Exact inverse of split + extract: every tile must match its grid
    entry's dimensions.
    """
    if len(patches) != grid.n_patches:
        raise ValueError(f"expected {grid.n_patches} patches, got {len(patches)}")
    out = np.zeros((grid.image_height, grid.image_width, 3), dtype=np.float64)
    for k, (entry, patch) in enumerate(zip(grid.entries, patches)):
        r, c, th, tw = entry
        arr = np.asarray(patch, dtype=np.float64)
        if arr.shape != (th, tw, 3):
            raise ValueError(f"patch {k} has shape {arr.shape}, grid entry needs ({th}, {tw}, 3)")
        out[r : r + th, c : c + tw] = arr
    return out


def to_luminance(image) -> np.ndarray:
    """Per-pixel luminance 0.299 R + 0.587 G + 0.114 B as an [H, W] plane."""
    arr = as_image(image)
    return arr[:, :, 0] * 0.299 + arr[:, :, 1] * 0.587 + arr[:, :, 2] * 0.114


# Rows of the D65 sRGB -> XYZ matrix (IEC 61966-2-1 primaries).
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def srgb_to_lab(image) -> np.ndarray:
    """Convert sRGB samples to CIELAB (D65 white) as an [H, W, 3] plane.

    Pipeline: sRGB decode (IEC 61966-2-1) -> linear RGB -> XYZ -> L*a*b*.
    """
    arr = np.clip(as_image(image), 0.0, 1.0)
    linear = np.where(arr <= 0.04045, arr / 12.92, ((arr + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    t = xyz / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(t > delta**3, np.cbrt(t), t / (3.0 * delta**2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)
