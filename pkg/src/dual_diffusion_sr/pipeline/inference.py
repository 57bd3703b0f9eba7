"""
Dual-chain inference: the kernel chain produces v, the image chain
generates the HR residual conditioned on (u, v).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import torch

from ..degradation.ops import bicubic_resize
from ..diffusion.process import reverse_chain
from ..errors import ShapeError
from ..kernels.kernelgen import project_kernel
from ..models.kernel_models import Kernel
from ..networks.bundle import ModelBundle

logger = logging.getLogger(__name__)

Rng = Union[int, torch.Generator, None]


def make_generator(rng: Rng) -> torch.Generator:
    if isinstance(rng, torch.Generator):
        return rng
    return torch.Generator().manual_seed(0 if rng is None else int(rng))


def sample_seed(seed: int, index: int) -> int:
    """Per-sample seed derived from (seed, index), stable across batch layouts."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


@dataclass
class KernelPrediction:
    v: torch.Tensor  # raw x_0 of the kernel chain, flattened, in scaled units
    kernel: Kernel  # projected unit-sum kernel, for reporting only


@dataclass
class SRResult:
    sr: torch.Tensor  # clamped to [-1, 1]
    x0_img: torch.Tensor
    up: torch.Tensor
    prediction: KernelPrediction


def _as_batch(lr: torch.Tensor) -> torch.Tensor:
    if lr.dim() == 3:
        return lr.unsqueeze(0)
    if lr.dim() != 4:
        raise ShapeError(f"expected a (3, h, w) LR image, got shape {tuple(lr.shape)}")
    if lr.shape[0] != 1:
        raise ShapeError(f"one LR image per call, got a batch of {lr.shape[0]}")
    return lr


@torch.no_grad()
def sample_kernel_chain(
    bundle: ModelBundle, u: torch.Tensor, generator: torch.Generator, progress: bool = False
) -> torch.Tensor:
    """Full reverse chain of the kernel predictor; returns raw x_0 of shape (B, 1, n, n)."""
    net = bundle.kernel_predictor
    device = next(net.parameters()).device
    n = bundle.config.dataset.kernel_size

    def predict(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return net(x.to(device), u, t.to(device))

    return reverse_chain(predict, (u.shape[0], 1, n, n), bundle.schedule, generator, progress=progress, desc="kernel")


@torch.no_grad()
def predict_kernel(lr: torch.Tensor, bundle: ModelBundle, rng: Rng = None, progress: bool = False) -> KernelPrediction:
    """lr is a signed-range (3, h, w) image."""
    bundle.require("encoder", "kernel")
    generator = make_generator(rng)
    device = next(bundle.encoder.parameters()).device
    u = bundle.encoder(_as_batch(lr).to(device))
    x0 = sample_kernel_chain(bundle, u, generator, progress)
    v = x0.reshape(-1)
    return KernelPrediction(v=v, kernel=project_kernel(v, bundle.config.dataset.kernel_size))


def admissible_lr_step(bundle: ModelBundle) -> int:
    """LR sides must be multiples of this for the image U-Net to accept s * side."""
    step = 2 ** bundle.config.architecture.image_levels
    return step // math.gcd(step, bundle.config.dataset.scale)


def check_lr_shape(lr: torch.Tensor, bundle: ModelBundle) -> None:
    h, w = lr.shape[-2:]
    s = bundle.config.dataset.scale
    if not bundle.image_predictor.admissible(s * h, s * w):
        m = admissible_lr_step(bundle)
        raise ShapeError(
            f"LR size {w}x{h} gives HR {s * w}x{s * h}, which the image network cannot take; "
            f"admissible LR sides are multiples of {m} ({m}, {2 * m}, {3 * m}, ...)"
        )


@torch.no_grad()
def super_resolve(lr: torch.Tensor, bundle: ModelBundle, rng: Rng = None, progress: bool = False) -> SRResult:
    """
    lr is a signed-range (3, h, w) image. The kernel chain runs first and
    then the image chain, both drawing from the same generator.
    """
    bundle.require("encoder", "kernel", "recon")
    check_lr_shape(lr, bundle)
    generator = make_generator(rng)
    s = bundle.config.dataset.scale
    device = next(bundle.encoder.parameters()).device

    lr_b = _as_batch(lr).to(device)
    u = bundle.encoder(lr_b)
    x0_ker = sample_kernel_chain(bundle, u, generator, progress)
    v = x0_ker.reshape(1, -1).to(device)

    net = bundle.image_predictor
    h, w = lr_b.shape[-2:]

    def predict(x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return net(x.to(device), u, v, t.to(device))

    x0_img = reverse_chain(predict, (1, lr_b.shape[1], s * h, s * w), bundle.schedule, generator, progress=progress, desc="image")[0]
    up = bicubic_resize(lr_b[0].cpu(), s, value_range="signed")
    sr = (x0_img + up).clamp(-1.0, 1.0)
    prediction = KernelPrediction(v=v.reshape(-1).cpu(), kernel=project_kernel(v, bundle.config.dataset.kernel_size))
    return SRResult(sr=sr, x0_img=x0_img, up=up, prediction=prediction)
