"""
Latent cache persistence (``latents.json``).

Each entry stores the 64 floats of a material's latent together with
the parameters it was encoded from, so a renderer can start without the
encoder.
"""

import json
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from ..domain.exceptions import DomainValidationError, format_error
from ..domain.models import MaterialLatent, MaterialSpec
from ..utils.logging import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]
LatentEntries = Dict[str, Tuple[MaterialLatent, MaterialSpec]]


class LatentRepository:
    def save(self, entries: LatentEntries, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = {
            material_id: {
                # repr round-trips float32 exactly
                'z': [float(x) for x in latent.z],
                'material': spec.to_dict(),
            }
            for material_id, (latent, spec) in sorted(entries.items())
        }
        path.write_text(json.dumps(data, indent=2))
        logger.debug("Saved latents", path=str(path), materials=len(entries))
        return path

    def load(self, path: PathLike) -> LatentEntries:
        path = Path(path)
        try:
            data = json.loads(path.read_text())
            return {
                material_id: (
                    MaterialLatent(np.asarray(entry['z'], dtype=np.float32)),
                    MaterialSpec.from_dict(entry['material']),
                )
                for material_id, entry in data.items()
            }
        except (OSError, ValueError, KeyError, DomainValidationError) as e:
            raise format_error(str(path), f"unreadable latent file: {e}", DomainValidationError)
