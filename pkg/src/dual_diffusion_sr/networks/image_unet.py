"""
Image-chain noise predictor: a U-Net of dynamic residual blocks.

x_t -> conv + Mish -> concat(bilinear-up u) -> 1x1 fuse
    -> levels x (DRB, DRB, stride-2 conv) -> 2 residual blocks
    -> levels x (transposed conv, concat skip, DRB, DRB) -> conv + Mish -> 1x1 conv

Every dynamic residual block is conditioned on (t_emb, v).
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError
from .blocks import DynamicResidualBlock, ResidualBlock, zero_module
from .embedding import TimeEmbedding


class ImageNoisePredictor(nn.Module):
    def __init__(
        self,
        color_channels: int = 3,
        encoder_channels: int = 32,
        channels: int = 64,
        levels: int = 4,
        kernel_dim: int = 576,
        v_proj_dim: int = 64,
        num_kernels: int = 4,
        temperature: float = 1.0,
        attention_hidden: int = 32,
        zero_init_output: bool = True,
    ):
        super().__init__()
        self.color_channels = color_channels
        self.encoder_channels = encoder_channels
        self.levels = levels
        self.kernel_dim = kernel_dim
        ch = channels

        def drb(cin: int) -> DynamicResidualBlock:
            return DynamicResidualBlock(
                cin,
                ch,
                t_dim=ch,
                v_dim=kernel_dim,
                v_proj_dim=v_proj_dim,
                num_kernels=num_kernels,
                temperature=temperature,
                attention_hidden=attention_hidden,
            )

        self.time = TimeEmbedding(ch)
        self.head = nn.Conv2d(color_channels, ch, 3, padding=1)
        self.fuse = nn.Conv2d(ch + encoder_channels, ch, 1)
        self.downs = nn.ModuleList(nn.ModuleList([drb(ch), drb(ch), nn.Conv2d(ch, ch, 3, 2, 1)]) for _ in range(levels))
        self.mid = nn.ModuleList([ResidualBlock(ch, ch, ch), ResidualBlock(ch, ch, ch)])
        self.ups = nn.ModuleList(
            nn.ModuleList([nn.ConvTranspose2d(ch, ch, 4, 2, 1), drb(2 * ch), drb(ch)]) for _ in range(levels)
        )
        self.tail = nn.Conv2d(ch, ch, 3, padding=1)
        self.out = nn.Conv2d(ch, color_channels, 1)
        if zero_init_output:
            zero_module(self.out)

    def admissible(self, height: int, width: int) -> bool:
        step = 2 ** self.levels
        return height % step == 0 and width % step == 0

    def forward(self, x_t: torch.Tensor, u: torch.Tensor, v: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        if x_t.dim() != 4 or x_t.shape[1] != self.color_channels:
            raise ShapeError(f"image state must be (B, {self.color_channels}, H, W), got {tuple(x_t.shape)}")
        b, _, h, w = x_t.shape
        if not self.admissible(h, w):
            raise ShapeError(f"HR size {h}x{w} is not divisible by {2 ** self.levels}")
        if u.dim() != 4 or u.shape[0] != b or u.shape[1] != self.encoder_channels:
            raise ShapeError(f"LR encoding must be ({b}, {self.encoder_channels}, h, w), got {tuple(u.shape)}")
        v = v.reshape(b, -1)

        t_emb = self.time(t)
        x = F.mish(self.head(x_t))
        u = F.interpolate(u, size=(h, w), mode="bilinear", align_corners=False)
        x = self.fuse(torch.cat([x, u], dim=1))

        skips = []
        for res1, res2, down in self.downs:
            x = res2(res1(x, t_emb, v), t_emb, v)
            skips.append(x)
            x = down(x)
        for res in self.mid:
            x = res(x, t_emb)
        for up, res1, res2 in self.ups:
            x = torch.cat([up(x), skips.pop()], dim=1)
            x = res2(res1(x, t_emb, v), t_emb, v)
        return self.out(F.mish(self.tail(x)))
