"""Degradation parameters with their production defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .errors import ConfigError


@dataclass(frozen=True)
class DegradationConfig:
    """Every tunable of the four degradations, serializable and hashable.

    Ranges are inclusive (lo, hi) pairs sampled uniformly per patch.
    """

    mask_ratio: float = 0.5          # fraction of lattice cells hidden
    mask_cell: int = 4               # image cells per mask-lattice cell
    flow_alpha: float = 0.6          # tanh displacement bound
    flow_sigma_range: tuple = (1.5, 3.5)
    perlin_octaves: int = 4
    perlin_persistence: float = 0.5
    perlin_base_spacing: int = 16    # lattice cells at the base octave
    perlin_lacunarity: float = 2.0
    down_scale_range: tuple = (0.25, 0.75)
    down_noise_range: tuple = (0.01, 0.1)
    down_sigma_range: tuple = (0.25, 1.0)
    gauss_noise_range: tuple = (0.075, 0.15)
    sp_salt_ratio: float = 0.5
    sp_amount_range: tuple = (0.01, 0.05)
    poisson_peak: float = 255.0      # photons at intensity 1.0; 0 disables
    grid_spacing: int = 4
    grid_line_width: int = 1

    def __post_init__(self):
        object.__setattr__(self, "flow_sigma_range", _as_range(self.flow_sigma_range))
        object.__setattr__(self, "down_scale_range", _as_range(self.down_scale_range))
        object.__setattr__(self, "down_noise_range", _as_range(self.down_noise_range))
        object.__setattr__(self, "down_sigma_range", _as_range(self.down_sigma_range))
        object.__setattr__(self, "gauss_noise_range", _as_range(self.gauss_noise_range))
        object.__setattr__(self, "sp_amount_range", _as_range(self.sp_amount_range))
        self.validate()

    def validate(self):
        def fraction(name, v):
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")

        fraction("mask_ratio", self.mask_ratio)
        fraction("sp_salt_ratio", self.sp_salt_ratio)
        if not 0.0 < self.perlin_persistence <= 1.0:
            raise ConfigError(f"perlin_persistence must lie in (0, 1], got {self.perlin_persistence}")
        if self.mask_cell < 1:
            raise ConfigError(f"mask_cell must be >= 1, got {self.mask_cell}")
        if self.flow_alpha < 0:
            raise ConfigError(f"flow_alpha must be >= 0, got {self.flow_alpha}")
        if self.perlin_octaves < 1:
            raise ConfigError(f"perlin_octaves must be >= 1, got {self.perlin_octaves}")
        if self.perlin_base_spacing < 2:
            raise ConfigError(f"perlin_base_spacing must be >= 2, got {self.perlin_base_spacing}")
        if self.perlin_lacunarity <= 1.0:
            raise ConfigError(f"perlin_lacunarity must be > 1, got {self.perlin_lacunarity}")
        if self.poisson_peak < 0:
            raise ConfigError(f"poisson_peak must be >= 0, got {self.poisson_peak}")
        if self.grid_spacing < 1 or self.grid_line_width < 1:
            raise ConfigError("grid_spacing and grid_line_width must be >= 1")
        for name in ("flow_sigma_range", "down_noise_range", "down_sigma_range",
                     "gauss_noise_range", "sp_amount_range", "down_scale_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ConfigError(f"{name} must satisfy lo <= hi, got ({lo}, {hi})")
            if lo < 0:
                raise ConfigError(f"{name} must be nonnegative, got ({lo}, {hi})")
        lo, hi = self.down_scale_range
        if not (0.0 < lo and hi <= 1.0):
            raise ConfigError(f"down_scale_range must lie in (0, 1], got ({lo}, {hi})")
        lo, hi = self.sp_amount_range
        if hi > 1.0:
            raise ConfigError(f"sp_amount_range must lie in [0, 1], got ({lo}, {hi})")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DegradationConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown degradation config keys: {sorted(unknown)}")
        return cls(**data)

    def with_overrides(self, **kwargs) -> "DegradationConfig":
        return replace(self, **kwargs)


def _as_range(value) -> tuple:
    try:
        lo, hi = value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"range must be a (lo, hi) pair, got {value!r}") from exc
    return (float(lo), float(hi))
