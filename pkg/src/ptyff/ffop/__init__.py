"""Fast-forward operator: U-Net, complex wrapping, weights I/O and training."""

from .unet import UNetConfig, init_weights, unet_backward, unet_forward, weight_shapes
from .operator import (
    IdentityOperator,
    UNetOperator,
    channels_to_complex,
    complex_to_channels,
    ff_apply,
)
from .weights import load_weights, save_weights
from .training import TrainConfig, make_training_pairs, train_operator

__all__ = [
    "UNetConfig",
    "init_weights",
    "unet_forward",
    "unet_backward",
    "weight_shapes",
    "IdentityOperator",
    "UNetOperator",
    "complex_to_channels",
    "channels_to_complex",
    "ff_apply",
    "load_weights",
    "save_weights",
    "TrainConfig",
    "make_training_pairs",
    "train_operator",
]
