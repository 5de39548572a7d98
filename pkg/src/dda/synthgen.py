"""Deterministic synthetic (clean, moire) patch-pair generation.

Clean patches are smooth procedural content (gradients, low-frequency
waves, flat rectangles). Moire is modeled as the product of two oriented
cosine gratings with per-channel phase offsets, which yields the colored
beat patterns characteristic of screen/sensor interference, optionally
restricted to part of the patch.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .image import as_image, save_png
from .prior import PriorConfig, gaussian_blur, moire_score

_COVERAGE_MODES = ("full", "half", "blob")


@dataclass(frozen=True)
class MoireParams:
    """Two-grating interference parameters.

    freq1/freq2 are spatial frequencies in cycles/pixel (at or below the
    0.5 Nyquist limit), angle1/angle2 the grating orientations in radians,
    phases the per-channel (R, G, B) phase offsets of the first grating.
    coverage selects where the pattern lands: the whole patch, its left
    half, or a smooth random blob seeded by coverage_seed.
    """

    freq1: float
    freq2: float
    angle1: float
    angle2: float
    amplitude: float
    phases: tuple
    coverage: str = "full"
    coverage_seed: int = 0

    def __post_init__(self):
        for f in (self.freq1, self.freq2):
            if not 0.0 < f <= 0.5:
                raise ValueError(f"grating frequency {f} outside (0, 0.5]")
        if not 0.0 <= self.amplitude <= 0.5:
            raise ValueError(f"amplitude {self.amplitude} outside [0, 0.5]")
        phases = tuple(float(p) for p in self.phases)
        if len(phases) != 3:
            raise ValueError("phases must hold one offset per RGB channel")
        object.__setattr__(self, "phases", phases)
        if self.coverage not in _COVERAGE_MODES:
            raise ValueError(f"unknown coverage mode: {self.coverage!r}")


def gen_clean(seed: int, h: int, w: int) -> np.ndarray:
    """Procedural moire-free content, deterministic in the seed."""
    if h < 1 or w < 1:
        raise ValueError("image dimensions must be positive")
    rng = np.random.default_rng(int(seed))
    y = np.linspace(0.0, 1.0, h).reshape(-1, 1)
    x = np.linspace(0.0, 1.0, w).reshape(1, -1)
    img = np.empty((h, w, 3))
    for c in range(3):
        gx, gy = rng.uniform(-0.3, 0.3, size=2)
        plane = rng.uniform(0.2, 0.8) + gx * x + gy * y
        for _ in range(2):
            fx, fy = rng.uniform(0.5, 3.0, size=2)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            plane = plane + rng.uniform(0.02, 0.12) * np.sin(2.0 * np.pi * (fx * x + fy * y) + phase)
        img[:, :, c] = plane
    for _ in range(int(rng.integers(1, 4))):
        r0 = int(rng.integers(0, h))
        c0 = int(rng.integers(0, w))
        rh = int(rng.integers(1, max(2, h // 3 + 1)))
        cw = int(rng.integers(1, max(2, w // 3 + 1)))
        img[r0 : r0 + rh, c0 : c0 + cw] = rng.uniform(0.1, 0.9, size=3)
    return np.clip(img, 0.0, 1.0)


def _coverage_mask(params: MoireParams, h: int, w: int) -> np.ndarray:
    if params.coverage == "full":
        return np.ones((h, w), dtype=bool)
    if params.coverage == "half":
        mask = np.zeros((h, w), dtype=bool)
        mask[:, : (w + 1) // 2] = True
        return mask
    rng = np.random.default_rng(int(params.coverage_seed))
    field = rng.standard_normal((h, w))
    sigma = max(2.0, min(h, w) / 8.0)
    field = gaussian_blur(field, sigma=sigma, radius=int(np.ceil(2 * sigma)))
    return field >= np.median(field)


def overlay_moire(clean, params: MoireParams) -> np.ndarray:
    """Add the two-grating interference pattern inside the coverage mask.

    Per channel c the addition is
    amplitude * cos(2 pi f1 (x cos a1 + y sin a1) + phases[c])
              * cos(2 pi f2 (x cos a2 + y sin a2)),
    followed by a clamp to [0, 1]. Zero amplitude returns the input unchanged.
    """
    arr = as_image(clean)
    h, w = arr.shape[:2]
    yy = np.arange(h, dtype=np.float64).reshape(-1, 1)
    xx = np.arange(w, dtype=np.float64).reshape(1, -1)
    u1 = 2.0 * np.pi * params.freq1 * (xx * np.cos(params.angle1) + yy * np.sin(params.angle1))
    u2 = 2.0 * np.pi * params.freq2 * (xx * np.cos(params.angle2) + yy * np.sin(params.angle2))
    envelope = np.cos(u2)
    mask = _coverage_mask(params, h, w)
    out = arr.copy()
    for c in range(3):
        stripes = params.amplitude * np.cos(u1 + params.phases[c]) * envelope
        out[:, :, c] = np.where(mask, out[:, :, c] + stripes, out[:, :, c])
    return np.clip(out, 0.0, 1.0)


def sample_params(rng, moire_free_rate: float = 0.2) -> MoireParams:
    """Draw randomized interference parameters.

    With probability moire_free_rate the amplitude is zero (a moire-free
    pair); otherwise it falls in [0.1, 0.35] so patterns are clearly
    visible. The first grating carries the high frequency, the second a
    low beat frequency.
    """
    amplitude = 0.0 if rng.uniform() < moire_free_rate else float(rng.uniform(0.1, 0.35))
    coverage = _COVERAGE_MODES[int(rng.integers(0, 4)) % 3]  # full twice as likely
    return MoireParams(
        freq1=float(rng.uniform(0.08, 0.45)),
        freq2=float(rng.uniform(0.02, 0.12)),
        angle1=float(rng.uniform(0.0, np.pi)),
        angle2=float(rng.uniform(0.0, np.pi)),
        amplitude=amplitude,
        phases=tuple(float(p) for p in rng.uniform(0.0, 2.0 * np.pi, size=3)),
        coverage=coverage,
        coverage_seed=int(rng.integers(0, 2**31 - 1)),
    )


def gen_pair(seed: int, index: int, h: int, w: int, moire_free_rate: float = 0.2):
    """Deterministic (clean, moire, params) triple for a dataset index.

    The generator stream is derived from (seed, index), so pairs can be
    produced in any order or in parallel with identical results.
    """
    rng = np.random.default_rng([int(seed), int(index)])
    clean_seed = int(rng.integers(0, 2**63 - 1))
    params = sample_params(rng, moire_free_rate)
    clean = gen_clean(clean_seed, h, w)
    return clean, overlay_moire(clean, params), params


def params_to_dict(params: MoireParams) -> dict:
    return {
        "freq1": params.freq1,
        "freq2": params.freq2,
        "angle1": params.angle1,
        "angle2": params.angle2,
        "amplitude": params.amplitude,
        "phases": list(params.phases),
        "coverage": params.coverage,
        "coverage_seed": params.coverage_seed,
    }


def params_from_dict(data: dict) -> MoireParams:
    return MoireParams(
        freq1=data["freq1"],
        freq2=data["freq2"],
        angle1=data["angle1"],
        angle2=data["angle2"],
        amplitude=data["amplitude"],
        phases=tuple(data["phases"]),
        coverage=data["coverage"],
        coverage_seed=data["coverage_seed"],
    )


def gen_dataset(
    n_pairs: int,
    seed: int,
    patch_height: int,
    patch_width: int,
    out_dir,
    moire_free_rate: float = 0.2,
) -> str:
    """Write n_pairs of (clean, moire) PNGs plus a JSON manifest; returns the manifest path.

    Manifest entries hold file names relative to the manifest directory,
    the generation parameters, and the moire score of the (pre-quantization)
    moire patch under the default prior configuration.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    cfg = PriorConfig()
    entries = []
    for i in range(int(n_pairs)):
        clean, moire, params = gen_pair(seed, i, patch_height, patch_width, moire_free_rate)
        clean_name = f"pair{i:05d}_clean.png"
        moire_name = f"pair{i:05d}_moire.png"
        save_png(clean, os.path.join(out_dir, clean_name))
        save_png(moire, os.path.join(out_dir, moire_name))
        entries.append(
            {
                "clean_path": clean_name,
                "moire_path": moire_name,
                "params": params_to_dict(params),
                "score": moire_score(moire, cfg).score,
            }
        )
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(entries, fh, indent=2)
        fh.write("\n")
    return manifest_path


def load_manifest(path) -> list:
    """Read a dataset manifest, resolving file names against its directory."""
    with open(path) as fh:
        entries = json.load(fh)
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"manifest is empty or malformed: {path}")
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    resolved = []
    for entry in entries:
        resolved.append(
            {
                "clean_path": os.path.join(base, entry["clean_path"]),
                "moire_path": os.path.join(base, entry["moire_path"]),
                "params": entry.get("params"),
                "score": float(entry["score"]),
            }
        )
    return resolved
