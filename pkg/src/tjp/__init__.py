"""Deterministic degradation corpus factory for 2D/3D biomedical images.

Turns raw 2D/3D sources into self-supervision training pairs: random
multi-scale window sampling plus four task-related degradations (dual
masking, Perlin-noise deformation, spatially varying low-res, multi-stage
noise), with the metric kernels used to evaluate them. Every output is
bit-exactly regenerable from its manifest entry.
"""

from .config import DegradationConfig
from .deformation import (DeformationField, deformation_field, grid_image,
                          jacobian_stats, perlin_field, warp, zero_field)
from .errors import (ConfigError, DegenerateFieldError, DegenerateMaskError,
                     DomainError, EmptyCorpusError, FormatError,
                     ManifestError, TjpError, UndefinedMetricError,
                     UnsupportedError, WindowTooLargeError)
from .grid import Grid, normalize_intensity, resample_linear
from .lowres import SigmaField, degrade_lowres, sigma_field, \
    spatially_varying_gaussian
from .masking import MaskPair, dual_mask, generate_mask
from .metrics import LabelGrid, dice, dice_macro, hd95, psnr, sdlogj, ssim
from .noising import degrade_noise
from .corpus_io import (read_array, read_manifest, tile_iter, write_array,
                        write_manifest)
from .rng import RngStream, draw_gaussian, draw_poisson, rng_substream
from .sampler import (PatchRecord, SamplePlan, build_corpus,
                      multiscale_resize, sample_window)
from .synthetic import synthetic_volume

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateFieldError", "DegenerateMaskError",
    "DegradationConfig", "DeformationField", "DomainError",
    "EmptyCorpusError", "FormatError", "Grid", "LabelGrid", "ManifestError",
    "MaskPair", "PatchRecord", "RngStream", "SamplePlan", "SigmaField",
    "TjpError", "UndefinedMetricError", "UnsupportedError",
    "WindowTooLargeError", "build_corpus", "deformation_field",
    "degrade_lowres", "degrade_noise", "dice", "dice_macro", "draw_gaussian",
    "draw_poisson", "dual_mask", "generate_mask", "grid_image",
    "jacobian_stats", "hd95", "multiscale_resize", "normalize_intensity",
    "perlin_field", "psnr", "read_array", "read_manifest", "resample_linear",
    "rng_substream", "sample_window", "sdlogj", "sigma_field",
    "spatially_varying_gaussian", "ssim", "synthetic_volume", "tile_iter",
    "warp", "write_array", "write_manifest", "zero_field",
]
