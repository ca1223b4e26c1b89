"""Unsupervised salient-object detection via an equilibrium labeling game
over superpixels, refined by cross-feature-space random walks."""

from .common import (
    ConfigurationError,
    FormatError,
    NumericalError,
    SaliencyMap,
    minmax_normalize,
)
from .pipeline import PipelineConfig, load_config, run_multiscale, run_single_scale

__all__ = [
    "ConfigurationError",
    "FormatError",
    "NumericalError",
    "SaliencyMap",
    "minmax_normalize",
    "PipelineConfig",
    "load_config",
    "run_multiscale",
    "run_single_scale",
]

__version__ = "0.1.0"
