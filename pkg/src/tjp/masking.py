"""Dual-masking degradation: two partially overlapping masked views.

Masks live on a coarse lattice (``cell`` image cells per lattice cell)
and are replicated to full resolution. The pair is resampled until some
lattice cell is hidden in both views, so a fused reconstruction can
never see the whole patch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DegradationConfig
from .errors import DegenerateMaskError, DomainError
from .grid import Grid
from .rng import RngStream

MAX_RESAMPLES = 16


@dataclass(frozen=True, eq=False)
class MaskPair:
    """Two binary visibility masks on the mask-cell lattice (1 = visible)."""

    m_a: Grid
    m_b: Grid
    cell: int
    tau_keep: float

    def __post_init__(self):
        for m in (self.m_a, self.m_b):
            v = m.values
            if not np.isin(v, (0.0, 1.0)).all():
                raise DomainError("mask values must be 0 or 1")
        if self.m_a.shape != self.m_b.shape:
            raise DomainError("mask shapes differ")
        hidden_both = (self.m_a.values == 0.0) & (self.m_b.values == 0.0)
        if not hidden_both.any():
            raise DegenerateMaskError("no lattice cell is hidden in both masks")


def _lattice_shape(shape, cell: int) -> tuple:
    return tuple(int(np.ceil(e / cell)) for e in shape)


def _draw_lattice(lattice_shape, tau_keep: float, rng: RngStream) -> np.ndarray:
    xi = rng.uniform(size=int(np.prod(lattice_shape)))
    return (xi < tau_keep).reshape(lattice_shape)


def _block_upsample(lattice: np.ndarray, cell: int, shape) -> np.ndarray:
    out = lattice
    for axis in range(lattice.ndim):
        out = np.repeat(out, cell, axis=axis)
    return out[tuple(slice(0, e) for e in shape)]


def generate_mask(shape, cell: int, tau_keep: float, rng: RngStream) -> Grid:
    """Full-resolution binary mask from one uniform per lattice cell.

    A lattice cell is visible iff its uniform falls below ``tau_keep``;
    the lattice is replicated cell-by-cell to the requested shape, with
    partial border cells inheriting their lattice cell's value.
    """
    if cell < 1:
        raise DomainError(f"cell must be >= 1, got {cell}")
    if not 0.0 <= tau_keep <= 1.0:
        raise DomainError(f"tau_keep must lie in [0, 1], got {tau_keep}")
    shape = tuple(int(e) for e in shape)
    lattice = _draw_lattice(_lattice_shape(shape, cell), tau_keep, rng)
    return Grid(_block_upsample(lattice, cell, shape).astype(np.float32))


def dual_mask(x: Grid, cfg: DegradationConfig, rng: RngStream):
    """Produce the two masked views (x_a, x_b) and their MaskPair.

    Masks come from independent substreams "maskA"/"maskB" with
    tau_keep = 1 - cfg.mask_ratio. Both masks are redrawn together (up
    to 16 times) until some lattice cell is hidden in both.
    """
    tau_keep = 1.0 - cfg.mask_ratio
    lattice_shape = _lattice_shape(x.shape, cfg.mask_cell)
    for attempt in range(MAX_RESAMPLES):
        lat_a = _draw_lattice(lattice_shape, tau_keep, rng.substream("maskA", attempt))
        lat_b = _draw_lattice(lattice_shape, tau_keep, rng.substream("maskB", attempt))
        if (~lat_a & ~lat_b).any():
            break
    else:
        raise DegenerateMaskError(
            f"no jointly hidden cell after {MAX_RESAMPLES} resamples "
            f"(tau_keep={tau_keep})")
    pair = MaskPair(Grid(lat_a.astype(np.float32)),
                    Grid(lat_b.astype(np.float32)),
                    int(cfg.mask_cell), float(tau_keep))
    full_a = _block_upsample(lat_a, cfg.mask_cell, x.shape)
    full_b = _block_upsample(lat_b, cfg.mask_cell, x.shape)
    x_a = Grid(np.where(full_a, x.values, np.float32(0.0)), x.spacing)
    x_b = Grid(np.where(full_b, x.values, np.float32(0.0)), x.spacing)
    return x_a, x_b, pair
