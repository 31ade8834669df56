"""Splittable deterministic random streams.

Every stochastic draw in this package flows through an ``RngStream``: a
xoshiro256++ generator whose 256-bit working state is expanded with the
SplitMix64 sequence from a single 64-bit state. That 64-bit state is in
turn derived from a (master_seed, label, index) lineage, so any patch or
degradation can be regenerated in isolation without replaying the draws
that precede it.

Uniforms map u64 -> [0, 1) by taking the top 53 bits: (u >> 11) * 2**-53.
Scalar and bulk draws share one kernel, so chunking never changes the
sequence a lineage produces.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ConfigError, DomainError

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

# shift constants kept as uint64 so numba arithmetic never promotes
_C11 = np.uint64(11)
_C17 = np.uint64(17)
_C19 = np.uint64(19)
_C23 = np.uint64(23)
_C41 = np.uint64(41)
_C45 = np.uint64(45)
_INV53 = 1.0 / float(1 << 53)
_TWO_PI = 2.0 * np.pi


def splitmix64(x: int) -> int:
    """One SplitMix64 step: advance by the golden-ratio increment, mix."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def fnv1a64(label: str) -> int:
    """FNV-1a 64-bit hash of an ASCII label."""
    h = _FNV_OFFSET
    for byte in label.encode("ascii"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@njit(cache=True)
def _next_u64(s):
    r = s[0] + s[3]
    result = ((r << _C23) | (r >> _C41)) + s[0]
    t = s[1] << _C17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << _C45) | (s[3] >> _C19)
    return result


@njit(cache=True)
def _fill_uniform(s, out):
    for i in range(out.shape[0]):
        out[i] = np.float64(_next_u64(s) >> _C11) * _INV53


@njit(cache=True)
def _fill_gaussian(s, out, has_cache, cache_val):
    # Box-Muller; two uniforms per pair of outputs, odd tail cached.
    n = out.shape[0]
    i = 0
    if has_cache and n > 0:
        out[0] = cache_val
        i = 1
        has_cache = False
    while i < n:
        u1 = np.float64(_next_u64(s) >> _C11) * _INV53
        u2 = np.float64(_next_u64(s) >> _C11) * _INV53
        r = np.sqrt(-2.0 * np.log(1.0 - u1))
        z0 = r * np.cos(_TWO_PI * u2)
        z1 = r * np.sin(_TWO_PI * u2)
        out[i] = z0
        i += 1
        if i < n:
            out[i] = z1
            i += 1
        else:
            has_cache = True
            cache_val = z1
    return has_cache, cache_val


@njit(cache=True)
def _fill_poisson(s, lam, out):
    # Knuth multiplication for small rates, Gaussian approximation above.
    for i in range(lam.shape[0]):
        x = lam[i]
        if x <= 0.0:
            out[i] = 0
        elif x <= 30.0:
            limit = np.exp(-x)
            k = 0
            p = 1.0
            while True:
                k += 1
                p *= np.float64(_next_u64(s) >> _C11) * _INV53
                if p <= limit:
                    break
            out[i] = k - 1
        else:
            u1 = np.float64(_next_u64(s) >> _C11) * _INV53
            u2 = np.float64(_next_u64(s) >> _C11) * _INV53
            z = np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(_TWO_PI * u2)
            v = x + np.sqrt(x) * z
            if v < 0.0:
                v = 0.0
            out[i] = np.int64(np.rint(v))


class RngStream:
    """Single-owner deterministic stream tied to a seed lineage.

    ``seed`` is the derived 64-bit state; ``lineage`` records how it was
    derived. Identical lineage always replays the identical sequence.
    """

    __slots__ = ("seed", "lineage", "_s", "_has_cache", "_cache")

    def __init__(self, seed: int, lineage: tuple):
        self.seed = seed & _MASK64
        self.lineage = lineage
        state = np.empty(4, dtype=np.uint64)
        sm = self.seed
        for i in range(4):
            out = splitmix64(sm)
            sm = (sm + _GOLDEN) & _MASK64
            state[i] = out
        self._s = state
        self._has_cache = False
        self._cache = 0.0

    def substream(self, label: str, index: int = 0) -> "RngStream":
        """Derive an independent child stream; does not consume draws."""
        return rng_substream(self.seed, label, index)

    def next_u64(self) -> int:
        return int(_next_u64(self._s))

    def uniform(self, size=None):
        """Uniform draw(s) in [0, 1)."""
        if size is None:
            out = np.empty(1, dtype=np.float64)
            _fill_uniform(self._s, out)
            return float(out[0])
        out = np.empty(int(size), dtype=np.float64)
        _fill_uniform(self._s, out)
        return out

    def uniform_in(self, lo: float, hi: float) -> float:
        """One uniform mapped to [lo, hi]; always consumes one draw."""
        return lo + self.uniform() * (hi - lo)

    def randint(self, n: int) -> int:
        """Uniform integer in {0, ..., n-1}."""
        return min(int(self.uniform() * n), n - 1)

    def gaussian(self, mu: float = 0.0, sigma: float = 1.0, size=None):
        """Gaussian draw(s) via Box-Muller with a cached second value."""
        if size is None:
            out = np.empty(1, dtype=np.float64)
            self._has_cache, self._cache = _fill_gaussian(
                self._s, out, self._has_cache, self._cache)
            return mu + sigma * float(out[0])
        out = np.empty(int(size), dtype=np.float64)
        self._has_cache, self._cache = _fill_gaussian(
            self._s, out, self._has_cache, self._cache)
        if mu != 0.0 or sigma != 1.0:
            out = mu + sigma * out
        return out

    def poisson(self, lam):
        """Poisson counts for scalar or per-cell rates."""
        lam_arr = np.atleast_1d(np.asarray(lam, dtype=np.float64))
        out = np.empty(lam_arr.shape[0], dtype=np.int64)
        _fill_poisson(self._s, lam_arr, out)
        return out if np.ndim(lam) else int(out[0])


def rng_substream(master_seed: int, label: str, index: int = 0) -> RngStream:
    """Derive the stream for (master_seed, label, index).

    The 64-bit state is the SplitMix64 finalization of
    master_seed XOR fnv1a64(label) XOR (index * golden-ratio constant);
    a zero result is finalized once more so the state is never zero.
    """
    try:
        nbytes = len(label.encode("ascii"))
    except UnicodeEncodeError as exc:
        raise ConfigError(f"stream label must be ASCII: {label!r}") from exc
    if nbytes > 32:
        raise ConfigError(f"stream label longer than 32 bytes: {label!r}")
    raw = (master_seed & _MASK64) ^ fnv1a64(label) ^ ((index * _GOLDEN) & _MASK64)
    state = splitmix64(raw)
    if state == 0:
        state = splitmix64(state)
    return RngStream(state, (master_seed & _MASK64, label, index & _MASK64))


def draw_gaussian(rng: RngStream, mu: float, sigma: float) -> float:
    """One N(mu, sigma^2) draw. Requires sigma >= 0; sigma == 0 gives mu."""
    return rng.gaussian(mu, sigma)


def draw_poisson(rng: RngStream, lam: float) -> int:
    """One Poisson count at rate lam."""
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0.0:
        raise DomainError(f"poisson rate must be finite and >= 0, got {lam}")
    return rng.poisson(lam)


def warmup():
    """Force-compile the draw kernels (cheap after the first run)."""
    stream = rng_substream(0, "warmup", 0)
    stream.uniform(size=2)
    stream.gaussian(size=3)
    stream.poisson(np.array([0.5, 40.0]))
