"""Residual building blocks shared by the two noise predictors"""

from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError
from .dynamic_conv import DynamicConv2d


def _skip(in_channels: int, out_channels: int) -> nn.Module:
    return nn.Identity() if in_channels == out_channels else nn.Conv2d(in_channels, out_channels, 1)


class ResidualBlock(nn.Module):
    """conv3x3 -> Mish -> + Linear(cond) -> conv3x3 -> Mish, plus a skip path."""

    def __init__(self, in_channels: int, out_channels: int, cond_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.cond_bias = nn.Linear(cond_dim, out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        self.skip = _skip(in_channels, out_channels)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        h = F.mish(self.conv1(x))
        h = h + self.cond_bias(cond)[:, :, None, None]
        h = F.mish(self.conv2(h))
        return h + self.skip(x)


class DynamicResidualBlock(nn.Module):
    """
    ResidualBlock with both convolutions dynamic.

    The conditioning vector is cat(t_emb, Linear(v)) when the block is built
    with a kernel condition (v_dim), otherwise t_emb alone. It drives both
    the attention of each dynamic convolution and the additive feature bias.
    """

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        t_dim: int,
        v_dim: Optional[int] = None,
        v_proj_dim: int = 64,
        num_kernels: int = 4,
        temperature: float = 1.0,
        attention_hidden: int = 32,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.t_dim = t_dim
        self.v_dim = v_dim
        self.v_proj = nn.Linear(v_dim, v_proj_dim) if v_dim else None
        cond_dim = t_dim + (v_proj_dim if v_dim else 0)
        dyn = dict(cond_dim=cond_dim, num_kernels=num_kernels, temperature=temperature, hidden=attention_hidden)

        self.dconv1 = DynamicConv2d(in_channels, out_channels, 3, **dyn)
        self.cond_bias = nn.Linear(cond_dim, out_channels)
        self.dconv2 = DynamicConv2d(out_channels, out_channels, 3, **dyn)
        self.skip = _skip(in_channels, out_channels)

    def condition(self, t_emb: torch.Tensor, v: Optional[torch.Tensor]) -> torch.Tensor:
        if self.v_proj is None:
            if v is not None:
                raise ShapeError("block was built without a kernel condition")
            return t_emb
        if v is None:
            raise ShapeError(f"block expects a kernel condition of length {self.v_dim}")
        v = v.reshape(v.shape[0], -1)
        if v.shape[1] != self.v_dim:
            raise ShapeError(f"kernel condition must have length {self.v_dim}, got {v.shape[1]}")
        return torch.cat([t_emb, self.v_proj(v)], dim=1)

    def forward(self, x: torch.Tensor, t_emb: torch.Tensor, v: Optional[torch.Tensor] = None) -> torch.Tensor:
        if x.shape[1] != self.in_channels:
            raise ShapeError(f"block expects {self.in_channels} channels, got {x.shape[1]}")
        cond = self.condition(t_emb, v)
        h = F.mish(self.dconv1(x, cond))
        h = h + self.cond_bias(cond)[:, :, None, None]
        h = F.mish(self.dconv2(h, cond))
        return h + self.skip(x)


def zero_module(module: nn.Module) -> nn.Module:
    for p in module.parameters():
        nn.init.zeros_(p)
    return module
