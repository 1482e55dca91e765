"""
Material decoder: spatial fusion of latent and footprint, then the
angular decoder over light (x, y, z) and view (x, y) channels.
"""

import torch
from torch import nn
from torch.nn import functional as F

from .encoding import encode_footprint

ANGULAR_CHANNELS = 5
OUTPUT_CHANNELS = 4


class MaterialDecoder(nn.Module):
    """
    Decoder with the spatial stage factored out.

    ``spatial_features`` depends only on (z, footprint), so a renderer can
    evaluate it once and reuse it for many direction pairs.
    Angular stage: h1 = lrelu(L1 x), h2 = lrelu(L2 h1),
    h3 = lrelu(L3 h2 + h1), h4 = lrelu(L4 h3), out = L5 h4.
    """

    def __init__(
        self,
        latent_size: int = 64,
        fusion_width: int = 128,
        angular_width: int = 64,
        bins: int = 8,
        slope: float = 0.01,
        one_blob: bool = True,
        spatial_fusion: bool = True,
    ):
        super().__init__()
        self.bins = bins
        self.slope = slope
        self.one_blob = one_blob
        self.spatial_fusion = spatial_fusion
        spatial_dim = 3 * bins if one_blob else 3
        if spatial_fusion:
            self.fuse1 = nn.Linear(latent_size + spatial_dim, fusion_width)
            self.fuse2 = nn.Linear(fusion_width, fusion_width)
            fused_dim = fusion_width
        else:
            fused_dim = latent_size + spatial_dim
        self.feature_size = fused_dim
        self.layer1 = nn.Linear(fused_dim + ANGULAR_CHANNELS, angular_width)
        self.layer2 = nn.Linear(angular_width, angular_width)
        self.layer3 = nn.Linear(angular_width, angular_width)
        self.layer4 = nn.Linear(angular_width, angular_width)
        self.layer5 = nn.Linear(angular_width, OUTPUT_CHANNELS)

    def spatial_features(self, z: torch.Tensor, centers: torch.Tensor, sizes: torch.Tensor) -> torch.Tensor:
        spatial = encode_footprint(centers, sizes, self.bins, self.one_blob)
        x = torch.cat([z, spatial], dim=-1)
        if not self.spatial_fusion:
            return x
        x = F.leaky_relu(self.fuse1(x), self.slope)
        return F.leaky_relu(self.fuse2(x), self.slope)

    def angular(self, features: torch.Tensor, omega_i: torch.Tensor, omega_o_xy: torch.Tensor) -> torch.Tensor:
        x = torch.cat([features, omega_i, omega_o_xy], dim=-1)
        h1 = F.leaky_relu(self.layer1(x), self.slope)
        h2 = F.leaky_relu(self.layer2(h1), self.slope)
        h3 = F.leaky_relu(self.layer3(h2) + h1, self.slope)
        h4 = F.leaky_relu(self.layer4(h3), self.slope)
        return self.layer5(h4)

    def forward(
        self,
        z: torch.Tensor,
        centers: torch.Tensor,
        sizes: torch.Tensor,
        omega_i: torch.Tensor,
        omega_o_xy: torch.Tensor,
    ) -> torch.Tensor:
        return self.angular(self.spatial_features(z, centers, sizes), omega_i, omega_o_xy)
