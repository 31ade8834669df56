"""Random multi-scale sampling: scale pyramid plus uniform window draws.

Sources are resized to a set of scales (area averaging for the
reciprocal-integer scales, linear interpolation otherwise) and fixed-size
windows are cut at uniformly random origins. Every window draw is seeded
by its global patch ordinal, so patches regenerate independently and in
any order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, EmptyCorpusError, WindowTooLargeError
from .grid import Grid, resample_linear
from .rng import RngStream, rng_substream

SAMPLE_LABEL = "sample"
DEFAULT_SCALES = (1.0, 0.5, 0.25)


@dataclass(frozen=True)
class SamplePlan:
    """How many windows to draw at which scales."""

    window: tuple
    counts: tuple
    scales: tuple = DEFAULT_SCALES
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "window", tuple(int(e) for e in self.window))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if len(self.counts) != len(self.scales):
            raise DomainError("counts must align with scales")
        if any(not 0.0 < s <= 1.0 for s in self.scales):
            raise DomainError(f"scales must lie in (0, 1], got {self.scales}")
        if any(c < 0 for c in self.counts):
            raise DomainError(f"counts must be >= 0, got {self.counts}")
        if any(w < 1 for w in self.window):
            raise DomainError(f"window extents must be >= 1, got {self.window}")


@dataclass(frozen=True)
class PatchRecord:
    """Provenance of one sampled window; regenerates the patch bit-exactly."""

    patch_id: int
    source_uri: str
    scale: float
    origin: tuple
    window: tuple
    seed_lineage: tuple   # (master_seed, label, index)


class SkipRecord(NamedTuple):
    source_uri: str
    scale: float
    reason: str


class SampleResult(NamedTuple):
    patches: list
    records: list
    skips: list


def _is_reciprocal_integer(scale: float) -> bool:
    inv = 1.0 / scale
    return abs(inv - round(inv)) < 1e-9


def _area_downsample(grid: Grid, factor: int, target) -> Grid:
    # trailing cells that do not fill a block are dropped
    vals = grid.values[tuple(slice(0, t * factor) for t in target)]
    vals = vals.astype(np.float64)
    for axis, t in enumerate(target):
        shape = vals.shape[:axis] + (t, factor) + vals.shape[axis + 1:]
        vals = vals.reshape(shape).mean(axis=axis + 1)
    spacing = tuple(s * factor for s in grid.spacing)
    return Grid(vals, spacing)


def multiscale_resize(image: Grid, scales) -> list:
    """Resize ``image`` to each scale; extents floor(e * s), minimum 1.

    Scale 1 returns the input unchanged. Reciprocal-integer scales use
    area averaging (block means); anything else uses linear
    interpolation. Both are convex, so no value leaves the input range.
    """
    out = []
    for s in scales:
        s = float(s)
        if not 0.0 < s <= 1.0:
            raise DomainError(f"scale must lie in (0, 1], got {s}")
        if s == 1.0:
            out.append(image)
            continue
        target = tuple(max(1, int(np.floor(e * s))) for e in image.shape)
        if _is_reciprocal_integer(s):
            factor = int(round(1.0 / s))
            if all(e >= factor * t for e, t in zip(image.shape, target)):
                out.append(_area_downsample(image, factor, target))
                continue
        out.append(resample_linear(image, target))
    return out


def sample_window(image_s: Grid, window, rng: RngStream):
    """Cut one window at a uniformly random origin; returns (patch, origin)."""
    window = tuple(int(w) for w in window)
    if len(window) != image_s.rank:
        raise DomainError(f"window rank {len(window)} != image rank {image_s.rank}")
    if any(w > e for w, e in zip(window, image_s.shape)):
        raise WindowTooLargeError(
            f"window {window} exceeds image extents {image_s.shape}")
    origin = tuple(rng.randint(e - w + 1)
                   for e, w in zip(image_s.shape, window))
    region = tuple(slice(o, o + w) for o, w in zip(origin, window))
    patch = Grid(image_s.values[region].copy(), image_s.spacing)
    return patch, origin


def build_corpus(source: Grid, plan: SamplePlan,
                 source_uri: str = "memory") -> SampleResult:
    """Draw every planned window from the scale pyramid of ``source``.

    Patch ordinals run row-major over (scales, draws); skipped scales
    keep their ordinal slots reserved, so each patch's seed never depends
    on which other scales fit. Scales whose resized image cannot hold the
    window produce one skip record instead of patches.
    """
    if len(plan.window) != source.rank:
        raise DomainError(
            f"window rank {len(plan.window)} != source rank {source.rank}")
    pyramid = multiscale_resize(source, plan.scales)
    patches, records, skips = [], [], []
    ordinal = 0
    for scale, count, image_s in zip(plan.scales, plan.counts, pyramid):
        if any(w > e for w, e in zip(plan.window, image_s.shape)):
            skips.append(SkipRecord(source_uri, scale,
                                    f"window {plan.window} exceeds scaled "
                                    f"extents {image_s.shape}"))
            ordinal += count
            continue
        for _ in range(count):
            stream = rng_substream(plan.master_seed, SAMPLE_LABEL, ordinal)
            patch, origin = sample_window(image_s, plan.window, stream)
            patches.append(patch)
            records.append(PatchRecord(
                patch_id=ordinal,
                source_uri=source_uri,
                scale=scale,
                origin=origin,
                window=plan.window,
                seed_lineage=(plan.master_seed, SAMPLE_LABEL, ordinal)))
            ordinal += 1
    if not records and any(c > 0 for c in plan.counts):
        raise EmptyCorpusError(
            f"no scale of {plan.scales} fits window {plan.window} "
            f"in source {source.shape}")
    return SampleResult(patches, records, skips)


def regenerate_patch(source: Grid, record: PatchRecord) -> Grid:
    """Rebuild one patch from its record (same resize + crop path)."""
    image_s = multiscale_resize(source, [record.scale])[0]
    region = tuple(slice(o, o + w) for o, w in zip(record.origin, record.window))
    return Grid(image_s.values[region].copy(), image_s.spacing)
