"""Image and kernel error metrics"""

import math

import numpy as np
import torch

from ..errors import ShapeError
from ..models.kernel_models import Kernel
from ..models.report_models import PSNR_IDENTICAL
from ..utils.image_io import ValueRange, to_unit


def psnr(a: torch.Tensor, b: torch.Tensor, value_range: ValueRange = "unit") -> float:
    """
    10 log10(1 / MSE) after mapping both images to [0, 1].

    MSE runs over every channel and pixel with no border crop. Identical
    images return PSNR_IDENTICAL (+inf).
    """
    if a.shape != b.shape:
        raise ShapeError(f"PSNR needs matching shapes, got {tuple(a.shape)} and {tuple(b.shape)}")
    if value_range == "signed":
        a, b = to_unit(a), to_unit(b)
    mse = float(torch.mean((a.double() - b.double()) ** 2))
    if mse == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(1.0 / mse)


def kernel_l2(a: Kernel, b: Kernel) -> float:
    """Mean per-element squared difference between two kernels."""
    if a.values.shape != b.values.shape:
        raise ShapeError(f"kernel shapes differ: {a.values.shape} vs {b.values.shape}")
    return float(np.mean((a.values.astype(np.float64) - b.values.astype(np.float64)) ** 2))
