"""Spatially-varying Gaussian down-sample degradation.

The degradation draws a random scale, pushes the (noised) image down and
back up with linear resampling, then applies a Gaussian blur whose
standard deviation varies smoothly across the image, mimicking the
heterogeneous blurring of optical systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.ndimage import map_coordinates

from .config import DegradationConfig
from .errors import DomainError
from .grid import Grid, resample_linear
from .rng import RngStream

# below this sigma the kernel is a delta; pass input through untouched
SIGMA_CUTOFF = 0.05
# control-point spacing of the sigma field, in cells
DEFAULT_CONTROL_SPACING = 8


@dataclass(frozen=True, eq=False)
class SigmaField:
    """Per-cell blur strength, linearly interpolated between control points."""

    values: Grid
    range: tuple
    control_spacing: int

    def __post_init__(self):
        lo, hi = self.range
        v = self.values.values
        if v.size and (v.min() < lo - 1e-6 or v.max() > hi + 1e-6):
            raise DomainError(f"sigma field escapes its range [{lo}, {hi}]")


def sigma_field(shape, sigma_range, control_spacing: int,
                rng: RngStream) -> SigmaField:
    """Draw a smooth sigma field over ``shape``.

    Control points sit every ``control_spacing`` cells; values between
    them come from multi-linear interpolation, so the field never leaves
    [sigma_min, sigma_max] and adjacent cells differ by at most
    (sigma_max - sigma_min) / control_spacing.
    """
    lo, hi = float(sigma_range[0]), float(sigma_range[1])
    if not 0.0 <= lo <= hi:
        raise DomainError(f"sigma range must satisfy 0 <= lo <= hi, got ({lo}, {hi})")
    if control_spacing < 1:
        raise DomainError(f"control spacing must be >= 1, got {control_spacing}")
    shape = tuple(int(e) for e in shape)
    npts = tuple(int(np.ceil((e - 1) / control_spacing)) + 1 if e > 1 else 1
                 for e in shape)
    draws = rng.uniform(size=int(np.prod(npts)))
    control = (lo + draws * (hi - lo)).reshape(npts)
    coords = np.meshgrid(*[np.arange(e, dtype=np.float64) / control_spacing
                           for e in shape], indexing="ij")
    values = map_coordinates(control, coords, order=1, mode="nearest")
    return SigmaField(Grid(values), (lo, hi), int(control_spacing))


@njit(cache=True)
def _svg2d(x, sig, wbuf, out):
    n0, n1 = x.shape
    for i0 in range(n0):
        for i1 in range(n1):
            s = sig[i0, i1]
            if s < SIGMA_CUTOFF:
                out[i0, i1] = x[i0, i1]
                continue
            r = int(np.ceil(3.0 * s))
            inv = 1.0 / (2.0 * s * s)
            for k in range(r + 1):
                wbuf[k] = np.exp(-(k * k) * inv)
            a0 = max(i0 - r, 0)
            b0 = min(i0 + r, n0 - 1)
            a1 = max(i1 - r, 0)
            b1 = min(i1 + r, n1 - 1)
            acc = 0.0
            norm = 0.0
            for j0 in range(a0, b0 + 1):
                w0 = wbuf[abs(j0 - i0)]
                for j1 in range(a1, b1 + 1):
                    w = w0 * wbuf[abs(j1 - i1)]
                    acc += w * x[j0, j1]
                    norm += w
            out[i0, i1] = acc / norm


@njit(cache=True)
def _svg3d(x, sig, wbuf, out):
    n0, n1, n2 = x.shape
    for i0 in range(n0):
        for i1 in range(n1):
            for i2 in range(n2):
                s = sig[i0, i1, i2]
                if s < SIGMA_CUTOFF:
                    out[i0, i1, i2] = x[i0, i1, i2]
                    continue
                r = int(np.ceil(3.0 * s))
                inv = 1.0 / (2.0 * s * s)
                for k in range(r + 1):
                    wbuf[k] = np.exp(-(k * k) * inv)
                a0 = max(i0 - r, 0)
                b0 = min(i0 + r, n0 - 1)
                a1 = max(i1 - r, 0)
                b1 = min(i1 + r, n1 - 1)
                a2 = max(i2 - r, 0)
                b2 = min(i2 + r, n2 - 1)
                acc = 0.0
                norm = 0.0
                for j0 in range(a0, b0 + 1):
                    w0 = wbuf[abs(j0 - i0)]
                    for j1 in range(a1, b1 + 1):
                        w01 = w0 * wbuf[abs(j1 - i1)]
                        for j2 in range(a2, b2 + 1):
                            w = w01 * wbuf[abs(j2 - i2)]
                            acc += w * x[j0, j1, j2]
                            norm += w
                out[i0, i1, i2] = acc / norm


def spatially_varying_gaussian(x: Grid, sf: SigmaField) -> Grid:
    """Blur with a per-cell Gaussian kernel of radius ceil(3*sigma).

    Each cell's kernel is truncated at the image border and renormalized
    to sum 1, so constants stay constant. Cells whose sigma falls below
    the cutoff pass through untouched.
    """
    if sf.values.shape != x.shape:
        raise DomainError(f"sigma field shape {sf.values.shape} != image shape {x.shape}")
    sig = sf.values.values.astype(np.float64)
    data = x.values.astype(np.float64)
    smax = float(sig.max()) if sig.size else 0.0
    wbuf = np.empty(int(np.ceil(3.0 * max(smax, 1.0))) + 2, dtype=np.float64)
    out = np.empty_like(data)
    if x.rank == 2:
        _svg2d(data, sig, wbuf, out)
    else:
        _svg3d(data, sig, wbuf, out)
    return Grid(out, x.spacing)


def degrade_lowres(x: Grid, cfg: DegradationConfig, rng: RngStream):
    """Noisy down-up resampling followed by spatially varying blur.

    Draws scale s and noise level from the config ranges, computes
    blur(up(down(x + noise))) with linear resampling both ways, and
    returns (degraded grid, parameter record). Output shape equals the
    input shape.
    """
    scale = rng.uniform_in(*cfg.down_scale_range)
    sigma_down = rng.uniform_in(*cfg.down_noise_range)
    values = x.values
    if sigma_down > 0.0:
        noise = rng.gaussian(sigma=sigma_down, size=values.size)
        values = values + noise.reshape(values.shape).astype(np.float32)
    noisy = Grid(values, x.spacing)
    target = tuple(max(1, int(np.floor(e * scale))) for e in x.shape)
    down = resample_linear(noisy, target)
    up = resample_linear(down, x.shape)
    sigma_stream = rng.substream("sigma")
    sf = sigma_field(x.shape, cfg.down_sigma_range, DEFAULT_CONTROL_SPACING,
                     sigma_stream)
    out = spatially_varying_gaussian(up, sf)
    params = {
        "scale": float(scale),
        "sigma_down": float(sigma_down),
        "sigma_seed": int(sigma_stream.seed),
    }
    return Grid(out.values, x.spacing), params
