"""
Degradation model LR = (HR * k) downsampled by s, plus bicubic resampling.

Images are tensors shaped (C, H, W) or (B, C, H, W); every channel is
processed independently and the input dtype is preserved.
"""

import math
from fractions import Fraction
from typing import Literal, Optional, Tuple, Union

import torch
import torch.nn.functional as F

from ..errors import DataError, ShapeError
from ..kernels.kernelgen import kernel_from_params, kernel_to_tensor
from ..models.kernel_models import DEFAULT_KERNEL_SIZE, Kernel, KernelParams
from ..utils.image_io import ValueRange, range_bounds

Boundary = Literal["reflect"]
KernelLike = Union[Kernel, torch.Tensor]


def _as_batch(img: torch.Tensor) -> Tuple[torch.Tensor, bool]:
    if img.dim() == 3:
        return img.unsqueeze(0), True
    if img.dim() == 4:
        return img, False
    raise ShapeError(f"expected a (C, H, W) or (B, C, H, W) image, got shape {tuple(img.shape)}")


def convolve2d(img: torch.Tensor, k: KernelLike, boundary: Boundary = "reflect") -> torch.Tensor:
    """
    Same-size true convolution with reflect padding.

    The kernel's anchor is index size // 2 on both axes, so a delta at that
    index reproduces the input exactly.
    """
    if boundary != "reflect":
        raise DataError(f"unsupported boundary {boundary!r}")
    x, squeeze = _as_batch(img)
    weight = kernel_to_tensor(k, x.dtype) if isinstance(k, Kernel) else k.to(x.dtype)
    if weight.dim() != 2 or weight.shape[0] != weight.shape[1]:
        raise ShapeError(f"kernel must be square 2-D, got shape {tuple(weight.shape)}")
    n = weight.shape[0]
    b, c, h, w = x.shape
    if n > min(h, w):
        raise ShapeError(f"kernel of size {n} is larger than the {h}x{w} image")

    anchor = n // 2
    before, after = n - 1 - anchor, anchor
    flat = x.reshape(b * c, 1, h, w)
    padded = F.pad(flat, (before, after, before, after), mode="reflect")
    out = F.conv2d(padded, weight.flip(0, 1).reshape(1, 1, n, n).to(x.device))
    out = out.reshape(b, c, h, w)
    return out.squeeze(0) if squeeze else out


def downsample(img: torch.Tensor, s: int) -> torch.Tensor:
    """Direct decimation keeping rows and columns 0, s, 2s, ..."""
    if s < 1:
        raise DataError(f"scale factor must be >= 1, got {s}")
    h, w = img.shape[-2:]
    if h % s or w % s:
        raise ShapeError(f"image {h}x{w} is not divisible by scale factor {s}")
    return img[..., ::s, ::s]


def degrade(
    hr: torch.Tensor, p: KernelParams, s: int, kernel_size: int = DEFAULT_KERNEL_SIZE
) -> Tuple[torch.Tensor, Kernel]:
    """Blur with the rendered kernel, then decimate. Returns the kernel for supervision."""
    h, w = hr.shape[-2:]
    if h % s or w % s:
        raise ShapeError(f"HR image {h}x{w} is not divisible by scale factor {s}")
    k = kernel_from_params(p, kernel_size)
    return downsample(convolve2d(hr, k), s), k


def _cubic(x: torch.Tensor) -> torch.Tensor:
    # Catmull-Rom (a = -0.5)
    absx = x.abs()
    absx2 = absx * absx
    absx3 = absx2 * absx
    inner = (1.5 * absx3 - 2.5 * absx2 + 1.0) * (absx <= 1).to(x.dtype)
    outer = (-0.5 * absx3 + 2.5 * absx2 - 4.0 * absx + 2.0) * ((absx > 1) & (absx <= 2)).to(x.dtype)
    return inner + outer


def _resize_matrix(in_size: int, out_size: int) -> torch.Tensor:
    """(out_size, in_size) interpolation matrix with replicated borders, rows summing to one."""
    scale = out_size / in_size
    kernel_width = 4.0 / scale if scale < 1 else 4.0
    x = torch.arange(1, out_size + 1, dtype=torch.float64)
    u = x / scale + 0.5 * (1 - 1 / scale)
    left = torch.floor(u - kernel_width / 2)
    taps = int(math.ceil(kernel_width)) + 2
    idx = left.unsqueeze(1) + torch.arange(taps, dtype=torch.float64).unsqueeze(0)
    dist = u.unsqueeze(1) - idx
    weights = scale * _cubic(dist * scale) if scale < 1 else _cubic(dist)
    weights = weights / weights.sum(dim=1, keepdim=True)
    idx = idx.clamp(1, in_size).long() - 1

    matrix = torch.zeros(out_size, in_size, dtype=torch.float64)
    matrix.scatter_add_(1, idx, weights)
    return matrix


def _target_size(size: int, factor: Fraction) -> int:
    target = size * factor
    if target.denominator != 1 or target < 1:
        raise DataError(f"resizing {size} px by {factor} does not give an integral size")
    return int(target)


def bicubic_resize(
    img: torch.Tensor, factor: Union[int, float, Fraction], value_range: Optional[ValueRange] = "unit"
) -> torch.Tensor:
    """Separable Catmull-Rom resize by a positive rational factor, clamped to value_range."""
    factor = Fraction(factor).limit_denominator(1_000_000) if isinstance(factor, float) else Fraction(factor)
    if factor <= 0:
        raise DataError(f"resize factor must be positive, got {factor}")
    h, w = img.shape[-2:]
    out_h, out_w = _target_size(h, factor), _target_size(w, factor)
    mh = _resize_matrix(h, out_h).to(img.dtype).to(img.device)
    mw = _resize_matrix(w, out_w).to(img.dtype).to(img.device)
    out = torch.einsum("oh,...hw,pw->...op", mh, img, mw)
    if value_range is not None:
        lo, hi = range_bounds(value_range)
        out = out.clamp(lo, hi)
    return out.contiguous()
