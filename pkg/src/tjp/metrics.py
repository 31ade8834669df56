"""Evaluation kernels: PSNR, SSIM, Dice, HD95, SDlogJ.

All metrics are symmetric in their two inputs. Intensity metrics accept
either ``Grid`` objects or bare arrays (computation runs in float64
regardless); segmentation metrics operate on ``LabelGrid`` inputs that
share a shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d
from scipy.spatial import cKDTree

from . import deformation
from .errors import DomainError, UndefinedMetricError
from .grid import Grid

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True, eq=False)
class LabelGrid:
    """Nonnegative integer segmentation labels, 0 = background."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values)
        if not np.issubdtype(arr.dtype, np.integer):
            rounded = np.rint(arr)
            if not np.allclose(arr, rounded, atol=1e-6):
                raise DomainError("labels must be integers")
            arr = rounded.astype(np.int64)
        else:
            arr = arr.astype(np.int64)
        if arr.ndim not in (2, 3):
            raise DomainError(f"label rank must be 2 or 3, got {arr.ndim}")
        if arr.size and arr.min() < 0:
            raise DomainError("labels must be nonnegative")
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple:
        return self.values.shape


def _as_f64(x) -> np.ndarray:
    arr = x.values if isinstance(x, Grid) else np.asarray(x)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise DomainError(f"rank must be 2 or 3, got {arr.ndim}")
    return arr


def psnr(a, b, max_val: float) -> float:
    """10 log10(max_val^2 / MSE); +inf when the inputs coincide."""
    av, bv = _as_f64(a), _as_f64(b)
    if av.shape != bv.shape:
        raise DomainError(f"shape mismatch {av.shape} vs {bv.shape}")
    if max_val <= 0:
        raise DomainError(f"max_val must be positive, got {max_val}")
    mse = float(np.mean((av - bv) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(max_val * max_val / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


def _ssim_map_2d(a, b, max_val, win):
    def filt(img):
        out = correlate1d(img, win, axis=0, mode="reflect")
        return correlate1d(out, win, axis=1, mode="reflect")

    c1 = (SSIM_K1 * max_val) ** 2
    c2 = (SSIM_K2 * max_val) ** 2
    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim(a, b, max_val: float, win_size: int = SSIM_WINDOW,
         sigma: float = SSIM_SIGMA) -> float:
    """Mean local SSIM with a Gaussian window.

    3D inputs are scored as the average over 2D slices along the first
    axis. When the in-plane extents cannot hold the window, the window
    shrinks to the largest odd size that fits (extents below 3 are
    rejected).
    """
    av, bv = _as_f64(a), _as_f64(b)
    if av.shape != bv.shape:
        raise DomainError(f"shape mismatch {av.shape} vs {bv.shape}")
    plane = av.shape[-2:]
    if min(plane) < 3:
        raise DomainError(f"extents {plane} too small for SSIM")
    size = min(win_size, min(plane))
    if size % 2 == 0:
        size -= 1
    win = _gaussian_window(size, sigma)
    if av.ndim == 2:
        return float(np.mean(_ssim_map_2d(av, bv, max_val, win)))
    maps = [_ssim_map_2d(av[k], bv[k], max_val, win) for k in range(av.shape[0])]
    return float(np.mean(maps))


def _binary(grid: LabelGrid, label: int) -> np.ndarray:
    return grid.values == int(label)


def dice(a: LabelGrid, b: LabelGrid, label: int) -> float:
    """Overlap 2|A & B| / (|A| + |B|) of one label's masks."""
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    ma, mb = _binary(a, label), _binary(b, label)
    total = int(ma.sum()) + int(mb.sum())
    if total == 0:
        raise UndefinedMetricError(f"label {label} absent from both grids")
    return 2.0 * int((ma & mb).sum()) / total


def dice_macro(a: LabelGrid, b: LabelGrid) -> float:
    """Mean dice over every nonzero label present in either grid."""
    labels = np.union1d(np.unique(a.values), np.unique(b.values))
    labels = labels[labels > 0]
    if labels.size == 0:
        raise UndefinedMetricError("no nonzero labels present")
    return float(np.mean([dice(a, b, int(lab)) for lab in labels]))


def _surface_cells(mask: np.ndarray) -> np.ndarray:
    """Cells of the mask with a face neighbor outside it.

    Neighbors beyond the array border do not count, so a mask covering
    the whole grid has an empty surface.
    """
    boundary = np.zeros_like(mask)
    for axis in range(mask.ndim):
        lo = [slice(None)] * mask.ndim
        hi = [slice(None)] * mask.ndim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        differs = mask[tuple(lo)] != mask[tuple(hi)]
        boundary[tuple(lo)] |= differs
        boundary[tuple(hi)] |= differs
    return mask & boundary


def hd95(a: LabelGrid, b: LabelGrid, label: int, spacing=None) -> float:
    """95th percentile of pooled bidirectional surface distances.

    Surface cells are labeled cells with at least one differently-labeled
    face neighbor; distances are Euclidean between cell centers, scaled
    by the per-axis spacing, and the percentile interpolates linearly
    between order statistics.
    """
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    spacing = tuple(float(s) for s in (spacing or (1.0,) * a.values.ndim))
    if len(spacing) != a.values.ndim:
        raise DomainError(f"spacing {spacing} incompatible with rank {a.values.ndim}")
    surf_a = _surface_cells(_binary(a, label))
    surf_b = _surface_cells(_binary(b, label))
    if not surf_a.any() or not surf_b.any():
        raise UndefinedMetricError(f"label {label} has an empty surface")
    pts_a = np.argwhere(surf_a) * np.asarray(spacing)
    pts_b = np.argwhere(surf_b) * np.asarray(spacing)
    d_ab = cKDTree(pts_b).query(pts_a)[0]
    d_ba = cKDTree(pts_a).query(pts_b)[0]
    pooled = np.concatenate([d_ab, d_ba])
    return float(np.percentile(pooled, 95))


def sdlogj(field: deformation.DeformationField):
    """(sdlogj, folding fraction) of a deformation field."""
    return deformation.jacobian_stats(field)
