"""Fully convolutional semantic segmentation of aligned radar scan stacks."""

from .network import (FULL_SCALE, ConfigError, NetworkConfig, RadarSegNet,
                      build_network, parameter_count)
from .training import (DataError, FitConfig, export_predictions, fit,
                       load_checkpoint, predict, save_checkpoint, train_step,
                       weighted_loss)

__version__ = "0.1.0"

__all__ = [
    "FULL_SCALE", "ConfigError", "DataError", "FitConfig", "NetworkConfig",
    "RadarSegNet", "build_network", "export_predictions", "fit",
    "load_checkpoint", "parameter_count", "predict", "save_checkpoint",
    "train_step", "weighted_loss",
]
