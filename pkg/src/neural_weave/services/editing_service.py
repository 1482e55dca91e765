"""
Latent cache and material editing.

Albedo and tiling edits only touch the cached parameter snapshot; edits
to the parameters the encoder sees (pattern, twist, inclination,
roughness, height scale, gap) regenerate maps as needed and re-encode
exactly that material.
"""

from dataclasses import dataclass, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

from ..domain.enums import EditPath
from ..domain.exceptions import EditError, UnknownMaterialError
from ..domain.interfaces import LatentEncoder, MapProvider
from ..domain.models import EditResult, FabricParams, MaterialLatent, MaterialSpec
from ..rendering.scene import Scene, SceneMaterial
from ..utils.logging import get_logger

logger = get_logger(__name__)

ENCODER_FIELDS = ('pattern', 'twist', 'inclination', 'roughness', 'height_scale', 'gap')
ALBEDO_FIELDS = ('k_d_warp', 'k_d_weft', 'k_s_warp', 'k_s_weft')
SCENE_FIELDS = ('uv_scale',)
# w is a dataset-wide constant baked into the training targets
FIXED_FIELDS = ('w',)


@dataclass(frozen=True)
class LatentEntry:
    latent: MaterialLatent
    material: SceneMaterial


class LatentCache:
    """Material id to latent plus the material snapshot it was encoded from."""

    def __init__(self):
        self._entries: Dict[str, LatentEntry] = {}

    def __contains__(self, material_id: str) -> bool:
        return material_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, material_id: str) -> LatentEntry:
        try:
            return self._entries[material_id]
        except KeyError:
            raise UnknownMaterialError("Material is not in the latent cache", details=material_id)

    def put(self, material_id: str, entry: LatentEntry) -> None:
        self._entries[material_id] = entry

    def invalidate(self, material_id: str) -> None:
        self._entries.pop(material_id, None)

    def clear(self) -> None:
        self._entries.clear()

    def ids(self) -> List[str]:
        return sorted(self._entries)

    def latents(self) -> Dict[str, MaterialLatent]:
        return {mid: entry.latent for mid, entry in self._entries.items()}

    def params(self, optical_depth: float = 2.0) -> Dict[str, FabricParams]:
        return {mid: entry.material.params(optical_depth) for mid, entry in self._entries.items()}

    def specs(self) -> Dict[str, MaterialSpec]:
        return {mid: entry.material.spec for mid, entry in self._entries.items()}


def _apply_changes(material: SceneMaterial, changes: Mapping[str, Any]) -> Tuple[SceneMaterial, List[str]]:
    """New material with ``changes`` applied and the names of fields whose value changed."""
    known = set(ENCODER_FIELDS) | set(ALBEDO_FIELDS) | set(SCENE_FIELDS) | set(FIXED_FIELDS)
    unknown = sorted(set(changes) - known)
    if unknown:
        raise EditError("Unknown material parameters", details=", ".join(unknown))

    spec_changes = {k: v for k, v in changes.items() if k in ENCODER_FIELDS or k in FIXED_FIELDS}
    other_changes = {
        k: (tuple(float(c) for c in v) if k in ALBEDO_FIELDS else float(v))
        for k, v in changes.items() if k in ALBEDO_FIELDS or k in SCENE_FIELDS
    }
    spec = material.spec.with_changes(**spec_changes) if spec_changes else material.spec
    updated = replace(material, spec=spec, **other_changes)

    changed = [k for k in ENCODER_FIELDS + FIXED_FIELDS if getattr(spec, k) != getattr(material.spec, k)]
    changed += [k for k in ALBEDO_FIELDS + SCENE_FIELDS if getattr(updated, k) != getattr(material, k)]
    if any(k in FIXED_FIELDS for k in changed):
        raise EditError("The blend weight w is fixed by the training run and cannot be edited")
    return updated, changed


class EditingService:
    """Keeps the latent cache in step with scene material edits."""

    def __init__(self, encoder: LatentEncoder, maps: MapProvider, cache: Optional[LatentCache] = None):
        self.encoder = encoder
        self.maps = maps
        self.cache = cache if cache is not None else LatentCache()

    def _encode(self, material: SceneMaterial) -> MaterialLatent:
        spec = material.spec
        return self.encoder.encode_material(self.maps.maps_for(spec), spec.roughness, spec.height_scale)

    def encode_material(self, material_id: str, material: SceneMaterial) -> LatentEntry:
        entry = LatentEntry(self._encode(material), material)
        self.cache.put(material_id, entry)
        logger.debug("Encoded material", material=material_id)
        return entry

    def encode_scene(self, scene: Scene) -> LatentCache:
        """Encode every scene material whose cached entry is missing or stale."""
        for material_id in scene.material_ids():
            material = scene.materials[material_id]
            if material_id in self.cache and self.cache.get(material_id).material.spec == material.spec:
                if self.cache.get(material_id).material != material:
                    self.cache.put(material_id, LatentEntry(self.cache.get(material_id).latent, material))
                continue
            self.encode_material(material_id, material)
        return self.cache

    def edit_material(self, material_id: str, changes: Mapping[str, Any]) -> EditResult:
        """
        Apply parameter changes to a cached material.

        Raises:
            UnknownMaterialError: When the material has no cache entry
            ParameterRangeError: When a value leaves its sampling range
        """
        entry = self.cache.get(material_id)
        updated, changed = _apply_changes(entry.material, changes)
        if not changed:
            return EditResult(material_id, EditPath.UNCHANGED)
        if any(k in ENCODER_FIELDS for k in changed):
            latent = self._encode(updated)
            self.cache.put(material_id, LatentEntry(latent, updated))
            result = EditResult(material_id, EditPath.RE_ENCODE, tuple(changed), latent != entry.latent)
        else:
            self.cache.put(material_id, LatentEntry(entry.latent, updated))
            result = EditResult(material_id, EditPath.NO_ENCODE, tuple(changed), False)
        logger.info("Edited material", material=material_id, path=result.path.value, fields=list(changed))
        return result

    def apply_edits(self, scene: Scene, edits: Mapping[str, Mapping[str, Any]]) -> Tuple[Scene, List[EditResult]]:
        """Edit several materials and return the scene carrying the edited materials."""
        missing = sorted(set(edits) - set(scene.materials))
        if missing:
            raise UnknownMaterialError("Edits reference unknown materials", details=", ".join(missing))
        self.encode_scene(scene)
        results = []
        for material_id, changes in edits.items():
            results.append(self.edit_material(material_id, changes))
            scene = scene.with_material(material_id, self.cache.get(material_id).material)
        return scene, results
