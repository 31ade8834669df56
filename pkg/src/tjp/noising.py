"""Multi-stage noise simulation: Gaussian, photon (Poisson), salt-and-pepper.

Stage order is fixed: additive Gaussian noise clamped at zero, then
photon-counting resampling at the configured peak, then salt-and-pepper
on an exact fraction of cells. Disabling every stage reproduces the
input bit-for-bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .config import DegradationConfig
from .errors import DomainError
from .grid import Grid
from .rng import RngStream, _next_u64, _C11, _INV53

# Poisson counts may overshoot the nominal range near saturation; they
# are clamped here instead of 1.0 to avoid biasing bright-cell means.
POISSON_CLAMP = 1.5

INPUT_TOLERANCE = 1e-6


@njit(cache=True)
def _select_cells(s, n, k, salt_ratio, sel, val):
    # partial Fisher-Yates: k distinct indices, then one value draw each
    idx = np.arange(n)
    for i in range(k):
        u = np.float64(_next_u64(s) >> _C11) * _INV53
        j = i + int(u * (n - i))
        if j > n - 1:
            j = n - 1
        tmp = idx[i]
        idx[i] = idx[j]
        idx[j] = tmp
        sel[i] = idx[i]
    for i in range(k):
        u = np.float64(_next_u64(s) >> _C11) * _INV53
        val[i] = 1.0 if u < salt_ratio else 0.0


def degrade_noise(x: Grid, cfg: DegradationConfig, rng: RngStream):
    """Apply the three noise stages; returns (grid, parameter record).

    Requires input values in [0, 1]. The salt-and-pepper stage alters
    exactly round(amount * cells) cells, selected without replacement;
    each becomes 1 with probability cfg.sp_salt_ratio, else 0.
    """
    values = x.values
    if float(values.min()) < -INPUT_TOLERANCE or float(values.max()) > 1.0 + INPUT_TOLERANCE:
        raise DomainError(
            f"input range [{values.min()}, {values.max()}] outside [0, 1]")

    sigma_noise = rng.uniform_in(*cfg.gauss_noise_range)
    if sigma_noise > 0.0:
        eta = rng.gaussian(sigma=sigma_noise, size=values.size)
        values = values + eta.reshape(values.shape).astype(np.float32)
    values = np.maximum(np.float32(0.0), values)

    peak = float(cfg.poisson_peak)
    if peak > 0.0:
        lam = values.astype(np.float64).ravel() * peak
        counts = rng.poisson(lam)
        values = (counts.astype(np.float64) / peak).reshape(values.shape)
        values = np.clip(values, 0.0, POISSON_CLAMP).astype(np.float32)

    amount = rng.uniform_in(*cfg.sp_amount_range)
    k = int(round(amount * values.size))
    if k > 0:
        sel = np.empty(k, dtype=np.int64)
        val = np.empty(k, dtype=np.float64)
        _select_cells(rng._s, values.size, k, float(cfg.sp_salt_ratio), sel, val)
        flat = values.astype(np.float32).ravel()
        flat[sel] = val.astype(np.float32)
        values = flat.reshape(values.shape)

    params = {
        "sigma_noise": float(sigma_noise),
        "poisson_peak": peak,
        "sp_amount": float(amount),
        "sp_count": k,
    }
    return Grid(values, x.spacing), params
