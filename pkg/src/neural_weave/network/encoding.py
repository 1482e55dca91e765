"""
Input encodings: one-blob footprint channels and the specular g-mapping.
"""

import torch

MAX_FOOTPRINT_SIZE = 5.0


def one_blob_encode(x: torch.Tensor, bins: int = 8) -> torch.Tensor:
    """
    Gaussian one-blob encoding of values in [0, 1].

    Bin ``b`` holds exp(-(x - c_b)^2 / (2 sigma^2)) with c_b = (b + 0.5) / bins
    and sigma = 1 / bins. Inputs are clamped to [0, 1].

    Returns:
        Tensor with a trailing dimension of size ``bins``
    """
    x = torch.clamp(x, 0.0, 1.0).unsqueeze(-1)
    centers = (torch.arange(bins, dtype=x.dtype, device=x.device) + 0.5) / bins
    sigma = 1.0 / bins
    return torch.exp(-((x - centers) ** 2) / (2.0 * sigma * sigma))


def footprint_channels(centers: torch.Tensor, sizes: torch.Tensor) -> torch.Tensor:
    """(u, v, size / 5) per footprint as a (B, 3) tensor."""
    return torch.cat([centers, (sizes / MAX_FOOTPRINT_SIZE).unsqueeze(-1)], dim=-1)


def encode_footprint(centers: torch.Tensor, sizes: torch.Tensor, bins: int = 8, one_blob: bool = True) -> torch.Tensor:
    """
    Spatial input of the decoder.

    With ``one_blob`` the three footprint channels expand to 3 x bins;
    otherwise the raw clamped channels are passed through.
    """
    raw = torch.clamp(footprint_channels(centers, sizes), 0.0, 1.0)
    if not one_blob:
        return raw
    return one_blob_encode(raw, bins).flatten(start_dim=-2)


def g_map(x: torch.Tensor, k: torch.Tensor) -> torch.Tensor:
    """g(x) = ln(k x + 1)."""
    return torch.log1p(k * x)


def g_inverse(y: torch.Tensor, k: torch.Tensor) -> torch.Tensor:
    """g^-1(y) = (e^y - 1) / k."""
    return torch.expm1(y) / k


def k_for_light(omega_i_z: torch.Tensor, k_brdf: float, k_btdf: float) -> torch.Tensor:
    """Mapping constant chosen by the side of the light."""
    return torch.where(
        omega_i_z < 0.0,
        torch.full_like(omega_i_z, k_btdf),
        torch.full_like(omega_i_z, k_brdf),
    )
