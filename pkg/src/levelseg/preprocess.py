"""Slice-wise CT conditioning: intensity clipping, histogram equalization,
Gaussian smoothing and the soft-tissue mask."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .volumes import BinaryMask, ScalarVolume


@dataclass
class PreprocessConfig:
    hu_clip_threshold: float = 120.0
    tissue_interval: tuple = (5.0, 120.0)
    sigma: float = 0.0
    equalization_bins: int = 256

    def __post_init__(self):
        low, high = self.tissue_interval
        if not low < high:
            raise ValueError(f"tissue interval must satisfy low < high, got {self.tissue_interval}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.equalization_bins < 2:
            raise ValueError("equalization_bins must be >= 2")


def clip_hu(vol: ScalarVolume, threshold: float) -> ScalarVolume:
    """Set every value strictly above `threshold` to 0 (bone suppression)."""
    out = vol.values.copy()
    out[out > threshold] = 0.0
    return ScalarVolume(out, vol.spacing)


def _equalize_slice(sl, bins):
    lo = sl.min()
    hi = sl.max()
    if hi <= lo:
        return np.zeros_like(sl)
    idx = ((sl - lo) / (hi - lo) * bins).astype(np.int64)
    np.minimum(idx, bins - 1, out=idx)
    counts = np.bincount(idx.ravel(), minlength=bins)
    cdf = np.cumsum(counts) / sl.size
    return cdf[idx]


def equalize_slices(vol: ScalarVolume, bins: int = 256) -> ScalarVolume:
    """Histogram-equalize each z-slice independently.

    Each slice is mapped through its own empirical CDF over `bins`
    equal-width bins spanning that slice's [min, max]; output lies in
    [0, 1] and a constant slice maps to all zeros.
    """
    out = np.empty_like(vol.values)
    for k in range(vol.dims[2]):
        out[:, :, k] = _equalize_slice(vol.values[:, :, k], bins)
    return ScalarVolume(out, vol.spacing)


def _gauss_kernel(sigma):
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(vol: ScalarVolume, sigma: float) -> ScalarVolume:
    """2D Gaussian smoothing of each z-slice.

    Kernel truncated at radius ceil(3*sigma) and renormalized to sum 1;
    borders handled by edge replication. sigma = 0 is the identity.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return ScalarVolume(vol.values.copy(), vol.spacing)
    kernel = _gauss_kernel(sigma)
    out = correlate1d(vol.values, kernel, axis=0, mode="nearest")
    out = correlate1d(out, kernel, axis=1, mode="nearest")
    return ScalarVolume(out, vol.spacing)


def tissue_mask(raw_vol: ScalarVolume, interval=(5.0, 120.0)) -> BinaryMask:
    """Mask of voxels whose raw HU lies inside [low, high] (inclusive)."""
    low, high = interval
    vals = raw_vol.values
    return BinaryMask((vals >= low) & (vals <= high), raw_vol.spacing)


def preprocess_pipeline(raw_vol: ScalarVolume, cfg: PreprocessConfig):
    """Clip, equalize and smooth the raw volume; mask tissue from the raw HU.

    Returns (preprocessed image, tissue mask).
    """
    clipped = clip_hu(raw_vol, cfg.hu_clip_threshold)
    equalized = equalize_slices(clipped, cfg.equalization_bins)
    smoothed = gaussian_smooth(equalized, cfg.sigma)
    return smoothed, tissue_mask(raw_vol, cfg.tissue_interval)
