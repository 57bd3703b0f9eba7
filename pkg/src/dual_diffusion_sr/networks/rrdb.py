"""RRDB LR encoder and the pixel-shuffle head used to pretrain it"""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ShapeError

RESIDUAL_SCALE = 0.2


class ResidualDenseBlock(nn.Module):
    """Five densely connected 3x3 convs; the last maps back to nf channels."""

    def __init__(self, nf: int, gc: int):
        super().__init__()
        self.conv1 = nn.Conv2d(nf, gc, 3, padding=1)
        self.conv2 = nn.Conv2d(nf + gc, gc, 3, padding=1)
        self.conv3 = nn.Conv2d(nf + 2 * gc, gc, 3, padding=1)
        self.conv4 = nn.Conv2d(nf + 3 * gc, gc, 3, padding=1)
        self.conv5 = nn.Conv2d(nf + 4 * gc, nf, 3, padding=1)
        with torch.no_grad():
            for conv in (self.conv1, self.conv2, self.conv3, self.conv4, self.conv5):
                conv.weight.mul_(0.1)
                conv.bias.mul_(0.1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x1 = F.leaky_relu(self.conv1(x), 0.2)
        x2 = F.leaky_relu(self.conv2(torch.cat([x, x1], 1)), 0.2)
        x3 = F.leaky_relu(self.conv3(torch.cat([x, x1, x2], 1)), 0.2)
        x4 = F.leaky_relu(self.conv4(torch.cat([x, x1, x2, x3], 1)), 0.2)
        x5 = self.conv5(torch.cat([x, x1, x2, x3, x4], 1))
        return x + x5 * RESIDUAL_SCALE


class RRDB(nn.Module):
    def __init__(self, nf: int, gc: int):
        super().__init__()
        self.rdb1 = ResidualDenseBlock(nf, gc)
        self.rdb2 = ResidualDenseBlock(nf, gc)
        self.rdb3 = ResidualDenseBlock(nf, gc)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.rdb3(self.rdb2(self.rdb1(x))) * RESIDUAL_SCALE


class RRDBEncoder(nn.Module):
    """f(x_LR) = u, a (nf, h, w) feature map at LR resolution."""

    def __init__(self, in_channels: int = 3, nf: int = 32, num_blocks: int = 8, gc: int = 16):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = nf
        self.conv_first = nn.Conv2d(in_channels, nf, 3, padding=1)
        self.body = nn.Sequential(*[RRDB(nf, gc) for _ in range(num_blocks)])
        self.trunk_conv = nn.Conv2d(nf, nf, 3, padding=1)

    def forward(self, lr: torch.Tensor) -> torch.Tensor:
        if lr.dim() != 4 or lr.shape[1] != self.in_channels:
            raise ShapeError(f"encoder expects (B, {self.in_channels}, h, w), got {tuple(lr.shape)}")
        fea = self.conv_first(lr)
        return fea + self.trunk_conv(self.body(fea))


class SRHead(nn.Module):
    """
    Upsamples u to an HR residual. Only used while pretraining the encoder;
    power-of-two scales use x2 pixel-shuffle stages, others a single xs stage.
    """

    def __init__(self, nf: int, out_channels: int = 3, scale: int = 4):
        super().__init__()
        if scale & (scale - 1) == 0:
            factors = [2] * int(math.log2(scale))
        else:
            factors = [scale]
        stages = []
        for f in factors:
            stages += [nn.Conv2d(nf, nf * f * f, 3, padding=1), nn.PixelShuffle(f), nn.LeakyReLU(0.2)]
        self.upsample = nn.Sequential(*stages)
        self.conv_last = nn.Conv2d(nf, out_channels, 3, padding=1)

    def forward(self, u: torch.Tensor) -> torch.Tensor:
        return self.conv_last(self.upsample(u))
