"""Learnable components of both diffusion chains and the LR encoder"""

from .blocks import DynamicResidualBlock, ResidualBlock
from .bundle import (
    CHECKPOINT_NAMES,
    PHASES,
    ModelBundle,
    build_encoder,
    build_image_predictor,
    build_kernel_predictor,
    build_sr_head,
    count_parameters,
    load_checkpoint,
    save_checkpoint,
    state_checksum,
)
from .dynamic_conv import DynamicConv2d
from .embedding import TimeEmbedding, sinusoidal_embed
from .image_unet import ImageNoisePredictor
from .kernel_unet import KernelNoisePredictor
from .rrdb import RRDB, ResidualDenseBlock, RRDBEncoder, SRHead

__all__ = [
    "CHECKPOINT_NAMES",
    "PHASES",
    "DynamicConv2d",
    "DynamicResidualBlock",
    "ImageNoisePredictor",
    "KernelNoisePredictor",
    "ModelBundle",
    "RRDB",
    "RRDBEncoder",
    "ResidualBlock",
    "ResidualDenseBlock",
    "SRHead",
    "TimeEmbedding",
    "build_encoder",
    "build_image_predictor",
    "build_kernel_predictor",
    "build_sr_head",
    "count_parameters",
    "load_checkpoint",
    "save_checkpoint",
    "sinusoidal_embed",
    "state_checksum",
]
