"""
The neural fabric model: encoder plus decoder, numpy weight state and
the inference-side helpers used by the renderer and the editing service.
"""

import hashlib
import json
from collections import OrderedDict
from typing import Dict, Optional, Sequence, Union

import numpy as np
import torch
from torch import nn

from .decoder import MaterialDecoder
from .encoder import MaterialEncoder
from .encoding import g_inverse, k_for_light
from ..config.app_config import NetworkConfig, TrainingConfig
from ..domain.exceptions import DomainValidationError, TopologyMismatchError
from ..domain.models import ComponentQuad, Footprint, GeometryMaps, MaterialLatent

ArrayLike = Union[np.ndarray, torch.Tensor]


def _as_tensor(value: ArrayLike, dtype: torch.dtype) -> torch.Tensor:
    if isinstance(value, torch.Tensor):
        return value.to(dtype)
    return torch.as_tensor(np.asarray(value), dtype=dtype)


def he_uniform_init(module: nn.Module, slope: float = 0.01) -> None:
    """He-uniform fan-in initialisation for every conv and linear layer, zero biases."""
    for layer in module.modules():
        if isinstance(layer, (nn.Conv2d, nn.Linear)):
            nn.init.kaiming_uniform_(layer.weight, a=slope, mode='fan_in', nonlinearity='leaky_relu')
            if layer.bias is not None:
                nn.init.zeros_(layer.bias)


class NeuralFabricModel(nn.Module):
    """
    Encoder and decoder with a fixed topology.

    The decoder sees the material only through the latent vector, so a
    saved latent is enough to shade once the encoder is gone.
    """

    def __init__(
        self,
        config: Optional[NetworkConfig] = None,
        encoder_resolution: int = 64,
        k_brdf: float = 100.0,
        k_btdf: float = 1000.0,
    ):
        super().__init__()
        self.config = config or NetworkConfig()
        self.encoder_resolution = encoder_resolution
        self.k_brdf = k_brdf
        self.k_btdf = k_btdf
        self.encoder = MaterialEncoder(
            widths=tuple(self.config.encoder_widths),
            mlp_width=self.config.mlp_width,
            latent_size=self.config.latent_size,
            resolution=encoder_resolution,
            slope=self.config.leaky_slope,
        )
        self.decoder = MaterialDecoder(
            latent_size=self.config.latent_size,
            fusion_width=self.config.fusion_width,
            angular_width=self.config.angular_width,
            bins=self.config.blob_bins,
            slope=self.config.leaky_slope,
            one_blob=self.config.one_blob,
            spatial_fusion=self.config.spatial_fusion,
        )
        self.encode_calls = 0
        he_uniform_init(self, self.config.leaky_slope)

    @classmethod
    def from_config(cls, network: NetworkConfig, training: TrainingConfig, encoder_resolution: int = 64) -> 'NeuralFabricModel':
        return cls(network, encoder_resolution, training.k_brdf, training.k_btdf)

    # ------------------------------------------------------------------
    # Topology and weight state
    # ------------------------------------------------------------------

    def topology(self) -> Dict:
        return {
            'latent_size': self.config.latent_size,
            'fusion_width': self.config.fusion_width,
            'angular_width': self.config.angular_width,
            'encoder_widths': list(self.config.encoder_widths),
            'mlp_width': self.config.mlp_width,
            'blob_bins': self.config.blob_bins,
            'one_blob': self.config.one_blob,
            'spatial_fusion': self.config.spatial_fusion,
            'encoder_resolution': self.encoder_resolution,
            'parameters': [[name, list(p.shape)] for name, p in self.named_parameters()],
        }

    def topology_hash(self) -> bytes:
        """32-byte SHA-256 over the canonical JSON topology."""
        payload = json.dumps(self.topology(), sort_keys=True).encode('utf-8')
        return hashlib.sha256(payload).digest()

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def numpy_state(self) -> 'OrderedDict[str, np.ndarray]':
        return OrderedDict(
            (name, p.detach().cpu().numpy().astype(np.float32).copy()) for name, p in self.named_parameters()
        )

    def load_numpy_state(self, state: Dict[str, np.ndarray]) -> None:
        """
        Copy named float32 arrays into the parameters.

        Raises:
            TopologyMismatchError: On missing, extra or mis-shaped tensors
        """
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        extra = sorted(set(state) - set(params))
        if missing or extra:
            raise TopologyMismatchError(
                "Weight tensors do not match the model", details=f"missing={missing} extra={extra}"
            )
        with torch.no_grad():
            for name, param in params.items():
                value = np.asarray(state[name])
                if tuple(value.shape) != tuple(param.shape):
                    raise TopologyMismatchError(
                        "Weight tensor has the wrong shape",
                        details=f"{name}: {value.shape} vs {tuple(param.shape)}",
                    )
                param.copy_(torch.from_numpy(value.astype(np.float32)).to(param.dtype))

    # ------------------------------------------------------------------
    # Forward passes
    # ------------------------------------------------------------------

    def encode(self, maps: torch.Tensor, alpha: torch.Tensor, beta: torch.Tensor) -> torch.Tensor:
        """Differentiable encoder pass over a (B, 6, R, R) batch."""
        self.encode_calls += int(maps.shape[0])
        return self.encoder(maps, alpha, beta)

    def forward(
        self,
        z: torch.Tensor,
        centers: torch.Tensor,
        sizes: torch.Tensor,
        omega_i: torch.Tensor,
        omega_o: torch.Tensor,
    ) -> torch.Tensor:
        """
        Raw network output: diffuse slots linear, specular slots g-mapped.

        ``z`` may be a single latent shared by the batch. Only the x, y of
        ``omega_o`` are used.
        """
        if z.dim() == 1:
            z = z.unsqueeze(0)
        if z.shape[0] == 1 and centers.shape[0] != 1:
            z = z.expand(centers.shape[0], -1)
        return self.decoder(z, centers, sizes, omega_i, omega_o[..., :2])

    def unmap(self, raw: torch.Tensor, omega_i_z: torch.Tensor) -> torch.Tensor:
        """Inverse g-mapping of the specular slots; every slot clamped at zero."""
        k = k_for_light(omega_i_z, self.k_brdf, self.k_btdf).unsqueeze(-1)
        diffuse = raw[..., :2]
        specular = g_inverse(raw[..., 2:], k)
        return torch.clamp(torch.cat([diffuse, specular], dim=-1), min=0.0)

    # ------------------------------------------------------------------
    # Inference helpers
    # ------------------------------------------------------------------

    def encode_material(self, maps: Union[GeometryMaps, np.ndarray], roughness: float, height_scale: float) -> MaterialLatent:
        """
        Encode one material's downsampled (6, R, R) maps to its latent.

        Full-resolution GeometryMaps are downsampled first.
        """
        if isinstance(maps, GeometryMaps):
            from ..business.geometry import downsample_maps

            maps = downsample_maps(maps, self.encoder_resolution)
        tensor = _as_tensor(maps, torch.float32).unsqueeze(0)
        with torch.no_grad():
            z = self.encode(
                tensor,
                torch.tensor([roughness], dtype=torch.float32),
                torch.tensor([height_scale], dtype=torch.float32),
            )
        return MaterialLatent(z[0].cpu().numpy())

    def decode_batch(
        self,
        latent: MaterialLatent,
        centers: ArrayLike,
        sizes: ArrayLike,
        omega_i: ArrayLike,
        omega_o: ArrayLike,
        unmap: bool = True,
    ) -> np.ndarray:
        """(N, 4) components for N independent queries sharing one latent."""
        centers_t = _as_tensor(centers, torch.float32).reshape(-1, 2)
        with torch.no_grad():
            raw = self.forward(
                torch.from_numpy(np.array(latent.z)),
                centers_t,
                _as_tensor(sizes, torch.float32).reshape(-1),
                _as_tensor(omega_i, torch.float32).reshape(-1, 3),
                _as_tensor(omega_o, torch.float32).reshape(-1, 3),
            )
            if unmap:
                raw = self.unmap(raw, _as_tensor(omega_i, torch.float32).reshape(-1, 3)[:, 2])
        return raw.cpu().numpy().astype(np.float64)

    def decode_angular(
        self,
        latent: MaterialLatent,
        footprint: Footprint,
        omega_i: ArrayLike,
        omega_o: ArrayLike,
        unmap: bool = True,
    ) -> np.ndarray:
        """
        Many direction pairs for one (latent, footprint).

        The spatial-fusion features are evaluated once and broadcast over
        the angular queries.
        """
        wi = _as_tensor(omega_i, torch.float32).reshape(-1, 3)
        wo = _as_tensor(omega_o, torch.float32).reshape(-1, 3)
        with torch.no_grad():
            features = self.decoder.spatial_features(
                torch.from_numpy(np.array(latent.z)).unsqueeze(0),
                torch.tensor([footprint.center], dtype=torch.float32),
                torch.tensor([footprint.size], dtype=torch.float32),
            )
            raw = self.decoder.angular(features.expand(wi.shape[0], -1), wi, wo[:, :2])
            if unmap:
                raw = self.unmap(raw, wi[:, 2])
        return raw.cpu().numpy().astype(np.float64)

    def decode(
        self,
        latent: MaterialLatent,
        footprint: Footprint,
        omega_i: Sequence[float],
        omega_o: Sequence[float],
    ) -> ComponentQuad:
        """
        Single query, un-mapped to linear space.

        ``omega_o`` may be given as (x, y) only; z is reconstructed on the
        upper hemisphere. Raw g-space outputs come from ``decode_angular``
        with ``unmap=False``.
        """
        values = self.decode_angular(latent, footprint, np.asarray(omega_i)[None], _pad_view(omega_o)[None])[0]
        return ComponentQuad.from_array(values)


def _pad_view(omega_o: Sequence[float]) -> np.ndarray:
    omega_o = np.asarray(omega_o, dtype=np.float64).reshape(-1)
    if omega_o.size == 2:
        z = np.sqrt(max(1.0 - float(np.dot(omega_o, omega_o)), 0.0))
        return np.array([omega_o[0], omega_o[1], z])
    if omega_o.size != 3:
        raise DomainValidationError("View direction needs 2 or 3 components", details=str(omega_o.size))
    return omega_o


def interpolate_latents(z0: MaterialLatent, z1: MaterialLatent, t: float) -> MaterialLatent:
    """Linear blend between two latents; t outside [0, 1] extrapolates."""
    return MaterialLatent((1.0 - t) * z0.z.astype(np.float64) + t * z1.z.astype(np.float64))
