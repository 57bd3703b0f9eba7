"""Sinusoidal timestep encoding and the time MLP built on it"""

import math
from typing import Union

import torch
import torch.nn as nn

from ..errors import DataError

MAX_PERIOD = 10000.0


def sinusoidal_embed(t: Union[int, torch.Tensor], dim: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """
    Interleaved (sin, cos) pairs of t * f_i, with f_i spaced geometrically from
    1 down to 1 / MAX_PERIOD over the dim / 2 pairs.

    An int t gives a (dim,) vector, a tensor of B timesteps gives (B, dim).
    """
    if dim < 2 or dim % 2:
        raise DataError(f"embedding width must be even and >= 2, got {dim}")
    scalar = not isinstance(t, torch.Tensor)
    steps = torch.as_tensor(t, dtype=torch.float64).reshape(-1)
    if bool((steps < 0).any()):
        raise DataError("timesteps must be non-negative")

    half = dim // 2
    if half == 1:
        freqs = torch.ones(1, dtype=torch.float64)
    else:
        freqs = torch.exp(-math.log(MAX_PERIOD) * torch.arange(half, dtype=torch.float64) / (half - 1))
    angles = steps[:, None] * freqs[None, :].to(steps.device)
    emb = torch.stack([angles.sin(), angles.cos()], dim=-1).reshape(steps.shape[0], dim).to(dtype)
    return emb[0] if scalar else emb


class TimeEmbedding(nn.Module):
    """sinusoid(dim) -> Linear(dim, 4 dim) -> Mish -> Linear(4 dim, dim)"""

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.mlp = nn.Sequential(nn.Linear(dim, dim * 4), nn.Mish(), nn.Linear(dim * 4, dim))

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        param = next(self.parameters())
        emb = sinusoidal_embed(t.reshape(-1), self.dim, dtype=param.dtype).to(param.device)
        return self.mlp(emb)
