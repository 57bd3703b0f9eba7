"""
Convolution whose kernel is an attention-weighted mixture of K candidates.

The attention logits come from a small MLP over a per-sample conditioning
vector; biases are mixed with the same weights as the kernels.
"""

import math
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn import init

from ..errors import ShapeError


class DynamicConv2d(nn.Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        cond_dim: int,
        num_kernels: int = 4,
        temperature: float = 1.0,
        hidden: int = 32,
        stride: int = 1,
        padding: Optional[int] = None,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.cond_dim = cond_dim
        self.num_kernels = num_kernels
        self.temperature = temperature
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding

        self.weight = nn.Parameter(torch.empty(num_kernels, out_channels, in_channels, kernel_size, kernel_size))
        self.bias = nn.Parameter(torch.empty(num_kernels, out_channels))
        self.attention = nn.Sequential(nn.Linear(cond_dim, hidden), nn.Mish(), nn.Linear(hidden, num_kernels))
        self.reset_parameters()

    def reset_parameters(self) -> None:
        # each candidate gets the nn.Conv2d default init
        fan_in = self.in_channels * self.kernel_size * self.kernel_size
        bound = 1 / math.sqrt(fan_in)
        for k in range(self.num_kernels):
            init.kaiming_uniform_(self.weight[k], a=math.sqrt(5))
        init.uniform_(self.bias, -bound, bound)

    def attention_weights(self, cond: torch.Tensor) -> torch.Tensor:
        """(B, cond_dim) -> (B, K) softmax weights at the configured temperature."""
        if cond.dim() != 2 or cond.shape[1] != self.cond_dim:
            raise ShapeError(f"condition must be (B, {self.cond_dim}), got {tuple(cond.shape)}")
        return F.softmax(self.attention(cond) / self.temperature, dim=-1)

    def forward(self, x: torch.Tensor, cond: torch.Tensor, attn: Optional[torch.Tensor] = None) -> torch.Tensor:
        if x.dim() != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(f"expected (B, {self.in_channels}, H, W) input, got {tuple(x.shape)}")
        b, _, h, w = x.shape
        if attn is None:
            attn = self.attention_weights(cond)
        if attn.shape != (b, self.num_kernels):
            raise ShapeError(f"attention must be ({b}, {self.num_kernels}), got {tuple(attn.shape)}")

        # per-sample kernels, applied in one grouped convolution over the batch
        weight = torch.einsum("bk,koihw->boihw", attn, self.weight)
        weight = weight.reshape(b * self.out_channels, self.in_channels, self.kernel_size, self.kernel_size)
        bias = (attn @ self.bias).reshape(-1)
        out = F.conv2d(x.reshape(1, b * self.in_channels, h, w), weight, bias, self.stride, self.padding, groups=b)
        return out.reshape(b, self.out_channels, out.shape[-2], out.shape[-1])

    def extra_repr(self) -> str:
        return (
            f"{self.in_channels}, {self.out_channels}, kernel_size={self.kernel_size}, "
            f"K={self.num_kernels}, temperature={self.temperature}, stride={self.stride}"
        )
