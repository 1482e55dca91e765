"""
Material encoder: a shortened residual CNN over the downsampled normal
and orientation maps, followed by a residual MLP block that mixes in
roughness and height scale and projects to the latent vector.
"""

from typing import Sequence

import torch
from torch import nn
from torch.nn import functional as F

from ..domain.exceptions import ResolutionMismatchError

ENCODER_CHANNELS = 6


class BasicBlock(nn.Module):
    """Two 3x3 convolutions with an identity or 1x1 projection shortcut."""

    def __init__(self, in_channels: int, out_channels: int, stride: int = 1, slope: float = 0.01):
        super().__init__()
        self.slope = slope
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, stride=1, padding=1)
        if stride != 1 or in_channels != out_channels:
            self.shortcut = nn.Conv2d(in_channels, out_channels, 1, stride=stride)
        else:
            self.shortcut = nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = F.leaky_relu(self.conv1(x), self.slope)
        out = self.conv2(out)
        return F.leaky_relu(out + self.shortcut(x), self.slope)


class MaterialEncoder(nn.Module):
    """
    Maps (B, 6, R, R) geometry plus (alpha, beta) to (B, latent_size).

    Stem convolution, three stages of two basic blocks (the later two
    stages halve the resolution), global average pooling, then
    z1 = lrelu(fc1([f, alpha, beta])), z2 = lrelu(fc2(z1) + z1),
    latent = fc_out(z2).
    """

    def __init__(
        self,
        widths: Sequence[int] = (16, 32, 64),
        mlp_width: int = 128,
        latent_size: int = 64,
        resolution: int = 64,
        slope: float = 0.01,
    ):
        super().__init__()
        self.resolution = resolution
        self.slope = slope
        self.stem = nn.Conv2d(ENCODER_CHANNELS, widths[0], 3, padding=1)
        stages = []
        in_channels = widths[0]
        for index, width in enumerate(widths):
            stride = 1 if index == 0 else 2
            stages.append(BasicBlock(in_channels, width, stride, slope))
            stages.append(BasicBlock(width, width, 1, slope))
            in_channels = width
        self.stages = nn.Sequential(*stages)
        self.fc1 = nn.Linear(widths[-1] + 2, mlp_width)
        self.fc2 = nn.Linear(mlp_width, mlp_width)
        self.fc_out = nn.Linear(mlp_width, latent_size)

    def forward(self, maps: torch.Tensor, alpha: torch.Tensor, beta: torch.Tensor) -> torch.Tensor:
        if maps.dim() != 4 or maps.shape[1] != ENCODER_CHANNELS or tuple(maps.shape[-2:]) != (self.resolution,) * 2:
            raise ResolutionMismatchError(
                "Encoder input has the wrong shape",
                details=f"got {tuple(maps.shape)}, expected (B, {ENCODER_CHANNELS}, {self.resolution}, {self.resolution})",
            )
        x = F.leaky_relu(self.stem(maps), self.slope)
        x = self.stages(x)
        features = F.adaptive_avg_pool2d(x, 1).flatten(1)
        x = torch.cat([features, alpha.reshape(-1, 1), beta.reshape(-1, 1)], dim=1)
        z1 = F.leaky_relu(self.fc1(x), self.slope)
        z2 = F.leaky_relu(self.fc2(z1) + z1, self.slope)
        return self.fc_out(z2)
