"""Segmentation agreement metrics: Dice, Jaccard, Hausdorff and ASSD."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .volumes import BinaryMask


class MetricsError(Exception):
    pass


@dataclass
class MetricsReport:
    dice: float
    jaccard: float
    hausdorff: float
    assd: float

    def to_json(self):
        return json.dumps(asdict(self))


def _check_dims(a: BinaryMask, b: BinaryMask):
    if a.dims != b.dims:
        raise MetricsError(f"mask dims mismatch: {a.dims} vs {b.dims}")


def dice(a: BinaryMask, b: BinaryMask) -> float:
    """Overlap ratio 2|A&B| / (|A| + |B|); two empty masks count as 1."""
    _check_dims(a, b)
    na = a.count()
    nb = b.count()
    if na + nb == 0:
        return 1.0
    inter = int((a.values & b.values).sum())
    return 2.0 * inter / (na + nb)


def jaccard(a: BinaryMask, b: BinaryMask) -> float:
    """Overlap ratio |A&B| / |AuB|; two empty masks count as 1."""
    _check_dims(a, b)
    union = int((a.values | b.values).sum())
    if union == 0:
        return 1.0
    inter = int((a.values & b.values).sum())
    return inter / union


def surface_voxels(mask: BinaryMask) -> np.ndarray:
    """Foreground voxels with at least one of six face-neighbors background
    (out-of-bounds counts as background); returned as an (n, 3) index array."""
    m = mask.values
    padded = np.pad(m, 1, mode="constant", constant_values=False)
    interior = (
        padded[2:, 1:-1, 1:-1] & padded[:-2, 1:-1, 1:-1]
        & padded[1:-1, 2:, 1:-1] & padded[1:-1, :-2, 1:-1]
        & padded[1:-1, 1:-1, 2:] & padded[1:-1, 1:-1, :-2]
    )
    return np.argwhere(m & ~interior)


def _physical(points, spacing):
    return points * np.asarray(spacing, dtype=np.float64)


def _boundary_points(a, b, spacing, surface_only):
    _check_dims(a, b)
    if a.count() == 0 or b.count() == 0:
        raise MetricsError("distance metrics require two nonempty masks")
    if spacing is None:
        spacing = a.spacing
    if surface_only:
        pa, pb = surface_voxels(a), surface_voxels(b)
    else:
        pa, pb = np.argwhere(a.values), np.argwhere(b.values)
    return _physical(pa, spacing), _physical(pb, spacing)


def hausdorff(a: BinaryMask, b: BinaryMask, spacing=None, surface_only=True) -> float:
    """Greatest closest-point distance between the two masks, in physical
    units.  Computed on surface voxels by default; `surface_only=False`
    uses every foreground voxel."""
    pa, pb = _boundary_points(a, b, spacing, surface_only)
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return float(max(d_ab.max(), d_ba.max()))


def assd(a: BinaryMask, b: BinaryMask, spacing=None) -> float:
    """Average symmetric surface distance: pooled mean of closest-point
    distances between the two boundaries, in physical units."""
    pa, pb = _boundary_points(a, b, spacing, surface_only=True)
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return float((d_ab.sum() + d_ba.sum()) / (len(pa) + len(pb)))


def compute_report(a: BinaryMask, b: BinaryMask, spacing=None) -> MetricsReport:
    return MetricsReport(
        dice=dice(a, b),
        jaccard=jaccard(a, b),
        hausdorff=hausdorff(a, b, spacing),
        assd=assd(a, b, spacing),
    )
