"""Deterministic band-limited synthetic sources for demos and tests."""

from __future__ import annotations

import numpy as np

from .deformation import perlin_field
from .grid import Grid
from .rng import rng_substream


def synthetic_volume(shape, seed: int = 0) -> Grid:
    """Smooth blobby phantom in [0, 1], reproducible from the seed.

    Two Perlin layers at different lattice spacings give coarse anatomy
    plus fine texture; the result is min-max normalized.
    """
    shape = tuple(int(e) for e in shape)
    base = max(4, min(shape) // 4)
    coarse = perlin_field(shape, octaves=2, persistence=0.5, base_spacing=base,
                          lacunarity=2.0, rng=rng_substream(seed, "synthcoarse", 0))
    fine = perlin_field(shape, octaves=3, persistence=0.5,
                        base_spacing=max(2, base // 4), lacunarity=2.0,
                        rng=rng_substream(seed, "synthfine", 0))
    vals = coarse.values.astype(np.float64) + 0.25 * fine.values.astype(np.float64)
    lo, hi = vals.min(), vals.max()
    if hi > lo:
        vals = (vals - lo) / (hi - lo)
    else:
        vals = np.zeros_like(vals)
    return Grid(vals)
