"""
Kernel-chain noise predictor.

The kernel is a 1-channel image; u is bilinearly resized onto the kernel
grid and concatenated at the input. Blocks are plain residual blocks
conditioned on the timestep only.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import DataError, ShapeError
from .blocks import ResidualBlock, zero_module
from .embedding import TimeEmbedding


class KernelNoisePredictor(nn.Module):
    def __init__(
        self,
        kernel_size: int = 24,
        encoder_channels: int = 32,
        channels: int = 64,
        levels: int = 2,
        zero_init_output: bool = True,
    ):
        super().__init__()
        if kernel_size % (2 ** levels):
            raise DataError(f"kernel size {kernel_size} does not allow {levels} halvings")
        self.kernel_size = kernel_size
        self.encoder_channels = encoder_channels
        ch = channels

        self.time = TimeEmbedding(ch)
        self.head = nn.Conv2d(1 + encoder_channels, ch, 3, padding=1)
        self.downs = nn.ModuleList(
            nn.ModuleList([ResidualBlock(ch, ch, ch), ResidualBlock(ch, ch, ch), nn.Conv2d(ch, ch, 3, 2, 1)])
            for _ in range(levels)
        )
        self.mid = nn.ModuleList([ResidualBlock(ch, ch, ch), ResidualBlock(ch, ch, ch)])
        self.ups = nn.ModuleList(
            nn.ModuleList(
                [nn.ConvTranspose2d(ch, ch, 4, 2, 1), ResidualBlock(2 * ch, ch, ch), ResidualBlock(ch, ch, ch)]
            )
            for _ in range(levels)
        )
        self.tail = nn.Conv2d(ch, ch, 3, padding=1)
        self.out = nn.Conv2d(ch, 1, 1)
        if zero_init_output:
            zero_module(self.out)

    def forward(self, x_t: torch.Tensor, u: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        n = self.kernel_size
        if x_t.dim() != 4 or tuple(x_t.shape[1:]) != (1, n, n):
            raise ShapeError(f"kernel state must be (B, 1, {n}, {n}), got {tuple(x_t.shape)}")
        if u.dim() != 4 or u.shape[0] != x_t.shape[0] or u.shape[1] != self.encoder_channels:
            raise ShapeError(f"LR encoding must be (B, {self.encoder_channels}, h, w), got {tuple(u.shape)}")

        t_emb = self.time(t)
        u = F.interpolate(u, size=(n, n), mode="bilinear", align_corners=False)
        h = F.mish(self.head(torch.cat([x_t, u], dim=1)))

        skips = []
        for res1, res2, down in self.downs:
            h = res2(res1(h, t_emb), t_emb)
            skips.append(h)
            h = down(h)
        for res in self.mid:
            h = res(h, t_emb)
        for up, res1, res2 in self.ups:
            h = torch.cat([up(h), skips.pop()], dim=1)
            h = res2(res1(h, t_emb), t_emb)
        return self.out(F.mish(self.tail(h)))
