"""Multi-scale smoothed Perlin-noise deformation.

Builds bounded smooth displacement fields from multi-octave gradient
noise, warps grids through them, and reports Jacobian statistics used to
judge field plausibility (smoothness and folding).

Displacements live in normalized coordinates: a component value of 1.0
moves a sample by half the axis extent. After smoothing and per-component
z-normalization the field is bounded by alpha * tanh(.), so no component
ever exceeds alpha in magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.ndimage import map_coordinates

from .config import DegradationConfig
from .errors import DegenerateFieldError, DomainError
from .grid import Grid
from .lowres import DEFAULT_CONTROL_SPACING, SigmaField, sigma_field, \
    spatially_varying_gaussian
from .rng import RngStream


@dataclass(frozen=True, eq=False)
class DeformationField:
    """Per-cell displacement vectors in normalized coordinates."""

    shape: tuple
    comp: tuple            # one float32 Grid per axis
    alpha: float
    sigma_used: SigmaField | None = None

    def __post_init__(self):
        if len(self.comp) != len(self.shape):
            raise DomainError("component count must equal rank")
        for c in self.comp:
            if c.shape != tuple(self.shape):
                raise DomainError("component shape mismatch")
            peak = float(np.abs(c.values).max())
            if peak > self.alpha:
                raise DomainError(
                    f"displacement magnitude {peak} exceeds bound {self.alpha}")

    @property
    def rank(self) -> int:
        return len(self.shape)


@njit(cache=True)
def _perlin2(gx, gy, scale, amp, out):
    n0, n1 = out.shape
    for i0 in range(n0):
        u0 = i0 * scale
        c0 = int(np.floor(u0))
        f0 = u0 - c0
        w0 = f0 * f0 * f0 * (f0 * (f0 * 6.0 - 15.0) + 10.0)
        for i1 in range(n1):
            u1 = i1 * scale
            c1 = int(np.floor(u1))
            f1 = u1 - c1
            w1 = f1 * f1 * f1 * (f1 * (f1 * 6.0 - 15.0) + 10.0)
            n00 = gx[c0, c1] * f0 + gy[c0, c1] * f1
            n10 = gx[c0 + 1, c1] * (f0 - 1.0) + gy[c0 + 1, c1] * f1
            n01 = gx[c0, c1 + 1] * f0 + gy[c0, c1 + 1] * (f1 - 1.0)
            n11 = gx[c0 + 1, c1 + 1] * (f0 - 1.0) + gy[c0 + 1, c1 + 1] * (f1 - 1.0)
            a = n00 + w0 * (n10 - n00)
            b = n01 + w0 * (n11 - n01)
            out[i0, i1] += amp * (a + w1 * (b - a))


@njit(cache=True)
def _perlin3(gx, gy, gz, scale, amp, out):
    n0, n1, n2 = out.shape
    for i0 in range(n0):
        u0 = i0 * scale
        c0 = int(np.floor(u0))
        f0 = u0 - c0
        w0 = f0 * f0 * f0 * (f0 * (f0 * 6.0 - 15.0) + 10.0)
        for i1 in range(n1):
            u1 = i1 * scale
            c1 = int(np.floor(u1))
            f1 = u1 - c1
            w1 = f1 * f1 * f1 * (f1 * (f1 * 6.0 - 15.0) + 10.0)
            for i2 in range(n2):
                u2 = i2 * scale
                c2 = int(np.floor(u2))
                f2 = u2 - c2
                w2 = f2 * f2 * f2 * (f2 * (f2 * 6.0 - 15.0) + 10.0)
                d0 = f0 - 1.0
                d1 = f1 - 1.0
                d2 = f2 - 1.0
                n000 = gx[c0, c1, c2] * f0 + gy[c0, c1, c2] * f1 + gz[c0, c1, c2] * f2
                n100 = gx[c0 + 1, c1, c2] * d0 + gy[c0 + 1, c1, c2] * f1 + gz[c0 + 1, c1, c2] * f2
                n010 = gx[c0, c1 + 1, c2] * f0 + gy[c0, c1 + 1, c2] * d1 + gz[c0, c1 + 1, c2] * f2
                n110 = gx[c0 + 1, c1 + 1, c2] * d0 + gy[c0 + 1, c1 + 1, c2] * d1 + gz[c0 + 1, c1 + 1, c2] * f2
                n001 = gx[c0, c1, c2 + 1] * f0 + gy[c0, c1, c2 + 1] * f1 + gz[c0, c1, c2 + 1] * d2
                n101 = gx[c0 + 1, c1, c2 + 1] * d0 + gy[c0 + 1, c1, c2 + 1] * f1 + gz[c0 + 1, c1, c2 + 1] * d2
                n011 = gx[c0, c1 + 1, c2 + 1] * f0 + gy[c0, c1 + 1, c2 + 1] * d1 + gz[c0, c1 + 1, c2 + 1] * d2
                n111 = gx[c0 + 1, c1 + 1, c2 + 1] * d0 + gy[c0 + 1, c1 + 1, c2 + 1] * d1 + gz[c0 + 1, c1 + 1, c2 + 1] * d2
                a00 = n000 + w0 * (n100 - n000)
                a10 = n010 + w0 * (n110 - n010)
                a01 = n001 + w0 * (n101 - n001)
                a11 = n011 + w0 * (n111 - n011)
                b0 = a00 + w1 * (a10 - a00)
                b1 = a01 + w1 * (a11 - a01)
                out[i0, i1, i2] += amp * (b0 + w2 * (b1 - b0))


def _unit_gradients(rank: int, lattice_shape, rng: RngStream):
    """Random unit vectors at every lattice node, drawn row-major."""
    n = int(np.prod(lattice_shape))
    if rank == 2:
        theta = 2.0 * np.pi * rng.uniform(size=n)
        return (np.cos(theta).reshape(lattice_shape),
                np.sin(theta).reshape(lattice_shape))
    draws = rng.uniform(size=2 * n)
    z = 2.0 * draws[0::2] - 1.0
    phi = 2.0 * np.pi * draws[1::2]
    rxy = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return (( rxy * np.cos(phi)).reshape(lattice_shape),
            (rxy * np.sin(phi)).reshape(lattice_shape),
            z.reshape(lattice_shape))


def perlin_field(shape, octaves: int, persistence: float, base_spacing: int,
                 lacunarity: float, rng: RngStream) -> Grid:
    """Multi-octave gradient-lattice noise over the cell grid.

    Octave n contributes persistence**(n-1) times a unit-amplitude noise
    evaluated at frequency lacunarity**(n-1) relative to the base lattice
    spacing. Each octave's gradients come from the stream in octave order.
    """
    shape = tuple(int(e) for e in shape)
    rank = len(shape)
    if rank not in (2, 3):
        raise DomainError(f"rank must be 2 or 3, got {rank}")
    if octaves < 1 or not 0.0 < persistence <= 1.0:
        raise DomainError("need octaves >= 1 and persistence in (0, 1]")
    if base_spacing < 2 or lacunarity <= 1.0:
        raise DomainError("need base_spacing >= 2 and lacunarity > 1")
    out = np.zeros(shape, dtype=np.float64)
    for n in range(octaves):
        scale = lacunarity ** n / base_spacing
        amp = persistence ** n
        lattice = tuple(int(np.floor((e - 1) * scale)) + 2 for e in shape)
        grads = _unit_gradients(rank, lattice, rng)
        if rank == 2:
            _perlin2(grads[0], grads[1], scale, amp, out)
        else:
            _perlin3(grads[0], grads[1], grads[2], scale, amp, out)
    return Grid(out)


def deformation_field(shape, cfg: DegradationConfig, rng: RngStream,
                      constant_sigma: bool = False) -> DeformationField:
    """Draw a bounded smooth displacement field for ``shape``.

    Per axis: Perlin noise from substream "flow<axis>", smoothed by a
    Gaussian whose sigma is drawn from cfg.flow_sigma_range (a smooth
    sigma field by default, one constant sigma with constant_sigma=True),
    z-normalized, then bounded by flow_alpha * tanh(.).
    """
    shape = tuple(int(e) for e in shape)
    sigma_stream = rng.substream("flowsigma")
    if constant_sigma:
        sigma = sigma_stream.uniform_in(*cfg.flow_sigma_range)
        sf = SigmaField(Grid(np.full(shape, sigma, dtype=np.float32)),
                        (sigma, sigma), 1)
    else:
        sf = sigma_field(shape, cfg.flow_sigma_range, DEFAULT_CONTROL_SPACING,
                         sigma_stream)
    comps = []
    for axis in range(len(shape)):
        raw = perlin_field(shape, cfg.perlin_octaves, cfg.perlin_persistence,
                           cfg.perlin_base_spacing, cfg.perlin_lacunarity,
                           rng.substream(f"flow{axis}"))
        smooth = spatially_varying_gaussian(raw, sf).values.astype(np.float64)
        smooth -= smooth.mean()
        var = smooth.var()
        if var >= 1e-12:
            smooth /= np.sqrt(var)
        comps.append(Grid(cfg.flow_alpha * np.tanh(smooth)))
    return DeformationField(shape, tuple(comps), cfg.flow_alpha, sf)


def zero_field(shape) -> DeformationField:
    """Identity deformation over ``shape``."""
    shape = tuple(int(e) for e in shape)
    comps = tuple(Grid(np.zeros(shape, dtype=np.float32)) for _ in shape)
    return DeformationField(shape, comps, 0.0)


def field_from_components(comps) -> DeformationField:
    """Wrap raw component grids (bound taken from the observed peak)."""
    comps = tuple(c if isinstance(c, Grid) else Grid(c) for c in comps)
    alpha = max((float(np.abs(c.values).max()) for c in comps), default=0.0)
    return DeformationField(comps[0].shape, comps, alpha)


def warp(x: Grid, field: DeformationField) -> Grid:
    """Resample x at (cell + displacement), zero outside the domain.

    Normalized displacements convert to cells as comp * extent / 2;
    interpolation is bi/trilinear.
    """
    if field.shape != x.shape:
        raise DomainError(f"field shape {field.shape} != image shape {x.shape}")
    idx = np.meshgrid(*[np.arange(e, dtype=np.float64) for e in x.shape],
                      indexing="ij")
    coords = [idx[a] + field.comp[a].values * (x.shape[a] / 2.0)
              for a in range(x.rank)]
    out = map_coordinates(x.values, coords, order=1, mode="constant", cval=0.0)
    return Grid(out, x.spacing)


def jacobian_stats(field: DeformationField):
    """(sdlogj, nonpositive-determinant fraction) of identity + field.

    The Jacobian is taken at interior cells by central differences of the
    map phi = cell + displacement-in-cells. sdlogj is the standard
    deviation of log(det J) over cells with positive determinant; the
    second value is the fraction of interior cells with det J <= 0.
    """
    if any(e < 3 for e in field.shape):
        raise DomainError(f"every extent must be >= 3, got {field.shape}")
    rank = field.rank
    idx = np.meshgrid(*[np.arange(e, dtype=np.float64) for e in field.shape],
                      indexing="ij")
    phi = [idx[a] + field.comp[a].values.astype(np.float64) * (field.shape[a] / 2.0)
           for a in range(rank)]
    interior = tuple(slice(1, -1) for _ in range(rank))

    def diff(f, axis):
        lo = [slice(1, -1)] * rank
        hi = [slice(1, -1)] * rank
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        return (f[tuple(hi)] - f[tuple(lo)]) * 0.5

    jac = [[diff(phi[a], b) for b in range(rank)] for a in range(rank)]
    if rank == 2:
        det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
    else:
        det = (jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
               - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
               + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]))
    del interior
    positive = det > 0.0
    if not positive.any():
        raise DegenerateFieldError("every interior determinant is nonpositive")
    sdlogj = float(np.std(np.log(det[positive])))
    nonpos = float(np.count_nonzero(~positive) / det.size)
    return sdlogj, nonpos


def grid_image(shape, spacing: int, line_width: int) -> Grid:
    """Reference grid pattern: 1 on lattice lines, 0 elsewhere.

    A cell lies on a line when its index modulo ``spacing`` is below
    ``line_width`` along any axis.
    """
    if spacing < 1 or line_width < 1:
        raise DomainError("spacing and line_width must be >= 1")
    shape = tuple(int(e) for e in shape)
    on_line = np.zeros(shape, dtype=bool)
    for axis, e in enumerate(shape):
        axis_line = (np.arange(e) % spacing) < line_width
        view = [None] * len(shape)
        view[axis] = slice(None)
        on_line |= axis_line[tuple(view)]
    return Grid(on_line.astype(np.float32))
