"""Degradation model, resampling, metrics and synthetic datasets"""

from .dataset import MANIFEST_NAME, generate_dataset, load_kernel, load_triplet
from .metrics import kernel_l2, psnr
from .ops import bicubic_resize, convolve2d, degrade, downsample

__all__ = [
    "MANIFEST_NAME",
    "bicubic_resize",
    "convolve2d",
    "degrade",
    "downsample",
    "generate_dataset",
    "kernel_l2",
    "load_kernel",
    "load_triplet",
    "psnr",
]
