"""Snapshot spectral imaging: coded-aperture simulation and scale-mixture
MAP reconstruction of hyperspectral cubes from single 2D measurements."""

from .cube import (HsiCube, Mask2D, Measurement, SceneSpec, extract_patch,
                   generate_scene, random_mask)
from .errors import (BadMagicError, CassiError, DimensionOverflowError,
                     DivergenceError, FormatError, ParameterError, ShapeError,
                     TruncatedPayloadError)
from .filters import (SeparableFilterField, build_filters, compose_full,
                      local_mean, local_mean_full)
from .formats import (load_cube, load_mask, load_measurement, save_cube,
                      save_mask, save_measurement)
from .kernels import backend as kernel_backend
from .metrics import MetricReport, evaluate, psnr, psnr_per_band, ssim, ssim_per_band
from .operator import ForwardOperator, NoiseModel, add_noise
from .prior import GsmState, ScalePrior, update_weights
from .solver import (SolverConfig, SolverTrace, initialize, objective, run,
                     tv_baseline, x_step)
from .tune import TunerSpec, coordinate_search, loss

__version__ = "0.1.0"

__all__ = [
    "HsiCube", "Mask2D", "Measurement", "SceneSpec", "extract_patch",
    "generate_scene", "random_mask",
    "CassiError", "FormatError", "BadMagicError", "TruncatedPayloadError",
    "DimensionOverflowError", "ShapeError", "ParameterError", "DivergenceError",
    "save_cube", "load_cube", "save_mask", "load_mask", "save_measurement",
    "load_measurement",
    "ForwardOperator", "NoiseModel", "add_noise",
    "ScalePrior", "GsmState", "update_weights",
    "SeparableFilterField", "build_filters", "local_mean", "local_mean_full",
    "compose_full",
    "SolverConfig", "SolverTrace", "initialize", "objective", "x_step", "run",
    "tv_baseline",
    "psnr", "psnr_per_band", "ssim", "ssim_per_band", "MetricReport", "evaluate",
    "TunerSpec", "loss", "coordinate_search",
    "kernel_backend",
]
