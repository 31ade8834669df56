"""Scalar grid container and shared resampling primitives.

A ``Grid`` is the universal carrier for patches and volumes: a rank-2 or
rank-3 float32 array in row-major order with optional physical spacing
per axis. Every public operation in this package returns grids free of
NaN/Inf, enforced at construction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable n-dimensional (n in {2, 3}) scalar intensity array.

    values  : float32 C-contiguous array, nominally in [0, 1]
    spacing : physical size per axis (e.g. mm), defaults to 1.0 per axis
    """

    values: np.ndarray
    spacing: tuple = field(default=())

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float32)
        if arr.ndim not in (2, 3):
            raise DomainError(f"grid rank must be 2 or 3, got {arr.ndim}")
        if any(e < 1 for e in arr.shape):
            raise DomainError(f"grid extents must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise DomainError("grid contains NaN or Inf values")
        object.__setattr__(self, "values", arr)
        sp = self.spacing or (1.0,) * arr.ndim
        sp = tuple(float(s) for s in sp)
        if len(sp) != arr.ndim or any(s <= 0 for s in sp):
            raise DomainError(f"spacing {sp} incompatible with shape {arr.shape}")
        object.__setattr__(self, "spacing", sp)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def rank(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size


def normalize_intensity(arr: np.ndarray, intensity_range=None) -> tuple:
    """Map raw source values into [0, 1].

    Uses the supplied (lo, hi) range when given, otherwise the array's
    own min/max. Constant arrays map to all zeros. Returns
    (normalized float32 array, (lo, hi) actually applied).
    """
    arr = np.asarray(arr, dtype=np.float64)
    if intensity_range is not None:
        lo, hi = float(intensity_range[0]), float(intensity_range[1])
        if not hi > lo:
            raise DomainError(f"intensity range must satisfy lo < hi, got ({lo}, {hi})")
    else:
        lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        out = np.clip((arr - lo) / (hi - lo), 0.0, 1.0)
    else:
        out = np.zeros_like(arr)
    return out.astype(np.float32), (lo, hi)


def resample_linear(grid: Grid, target_shape) -> Grid:
    """Resample to ``target_shape`` by multi-linear interpolation.

    Output cell centers map proportionally onto input cell centers, so
    every output value is a convex combination of input values (no
    overshoot). Identical extents reproduce the input exactly.
    """
    target_shape = tuple(int(e) for e in target_shape)
    if len(target_shape) != grid.rank or any(e < 1 for e in target_shape):
        raise DomainError(f"bad target shape {target_shape} for rank {grid.rank}")
    if target_shape == grid.shape:
        return grid
    coords = []
    for out_e, in_e in zip(target_shape, grid.shape):
        ratio = out_e / in_e
        axis = (np.arange(out_e, dtype=np.float64) + 0.5) / ratio - 0.5
        coords.append(axis)
    mesh = np.meshgrid(*coords, indexing="ij")
    out = map_coordinates(grid.values, mesh, order=1, mode="nearest")
    spacing = tuple(s * in_e / out_e
                    for s, in_e, out_e in zip(grid.spacing, grid.shape, target_shape))
    return Grid(out, spacing)
