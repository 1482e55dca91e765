"""
Scene persistence: a small declarative JSON format.

    {
      "camera": {"position": [...], "look_at": [...], "up": [...], "fov": 40,
                 "width": 256, "height": 256},
      "light": {"kind": "point", "position": [...], "intensity": [...]},
      "background": [0, 0, 0],
      "materials": {"cloth": {"pattern": 0, "twist": 0, "inclination": 30,
                              "roughness": 0.5, "height_scale": 1.0,
                              "k_d_warp": [...], "uv_scale": 8, ...}},
      "objects": [{"type": "quad", "origin": [...], "edge_u": [...],
                   "edge_v": [...], "material": "cloth"}, ...]
    }

Relative texture paths resolve against the scene file's directory.
"""

import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
from PIL import Image

from ..domain.enums import LightKind, PrimitiveKind
from ..domain.exceptions import DomainValidationError, SceneFormatError, format_error
from ..domain.models import MaterialSpec
from ..rendering.camera import PinholeCamera
from ..rendering.scene import AlbedoTexture, Light, Primitive, Quad, Scene, SceneMaterial, Sphere, TriangleMesh
from ..utils.logging import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]
_ALBEDO_KEYS = ('k_d_warp', 'k_d_weft', 'k_s_warp', 'k_s_weft')


def _tuple3(values: Any) -> tuple:
    return tuple(float(v) for v in values)


def _camera_from_dict(data: Dict[str, Any]) -> PinholeCamera:
    return PinholeCamera(
        position=_tuple3(data['position']),
        look_at=_tuple3(data['look_at']),
        up=_tuple3(data.get('up', (0.0, 1.0, 0.0))),
        fov=float(data.get('fov', 40.0)),
        width=int(data.get('width', 256)),
        height=int(data.get('height', 256)),
    )


def _light_from_dict(data: Dict[str, Any]) -> Light:
    kind = LightKind(data['kind'])
    return Light(
        kind=kind,
        intensity=_tuple3(data['intensity']),
        position=_tuple3(data['position']) if 'position' in data else None,
        direction=_tuple3(data['direction']) if 'direction' in data else None,
    )


def _material_from_dict(data: Dict[str, Any]) -> SceneMaterial:
    spec = MaterialSpec.from_dict(data)
    albedos = {key: _tuple3(data[key]) for key in _ALBEDO_KEYS if key in data}
    return SceneMaterial(
        spec=spec,
        uv_scale=float(data.get('uv_scale', 1.0)),
        albedo_texture=data.get('albedo_texture'),
        **albedos,
    )


def _material_to_dict(material: SceneMaterial) -> Dict[str, Any]:
    data = material.spec.to_dict()
    data.update({key: list(value) for key, value in material.albedos().items()})
    data['uv_scale'] = material.uv_scale
    if material.albedo_texture:
        data['albedo_texture'] = material.albedo_texture
    return data


def _object_from_dict(data: Dict[str, Any]) -> Primitive:
    kind = PrimitiveKind(data['type'])
    if kind == PrimitiveKind.QUAD:
        return Quad(data['origin'], data['edge_u'], data['edge_v'], data['material'])
    if kind == PrimitiveKind.SPHERE:
        return Sphere(data['center'], float(data['radius']), data['material'])
    return TriangleMesh(data['positions'], data['normals'], data['uvs'], data['faces'], data['material'])


def _object_to_dict(obj: Primitive) -> Dict[str, Any]:
    if isinstance(obj, Quad):
        fields = {'origin': obj.origin, 'edge_u': obj.edge_u, 'edge_v': obj.edge_v}
    elif isinstance(obj, Sphere):
        fields = {'center': obj.center, 'radius': obj.radius}
    else:
        fields = {'positions': obj.positions, 'normals': obj.normals, 'uvs': obj.uvs, 'faces': obj.faces}
    data = {'type': obj.kind.value, 'material': obj.material}
    data.update({k: np.asarray(v).tolist() for k, v in fields.items()})
    return data


class SceneRepository:
    """Loads and saves JSON scenes."""

    def load(self, path: PathLike) -> Scene:
        """
        Parse a scene file.

        Raises:
            SceneFormatError: On unreadable JSON, missing keys or bad values
        """
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, ValueError) as e:
            raise format_error(str(path), f"unreadable scene: {e}", SceneFormatError)
        try:
            scene = self.from_dict(data, base_dir=path.parent)
        except SceneFormatError:
            raise
        except (KeyError, TypeError, ValueError, DomainValidationError) as e:
            raise format_error(str(path), f"{type(e).__name__}: {e}", SceneFormatError)
        logger.debug("Loaded scene", path=str(path), objects=len(scene.objects))
        return scene

    def from_dict(self, data: Dict[str, Any], base_dir: PathLike = '.') -> Scene:
        materials = {name: _material_from_dict(entry) for name, entry in data['materials'].items()}
        textures = {}
        for name, material in materials.items():
            if material.albedo_texture:
                textures[name] = self.load_texture(Path(base_dir) / material.albedo_texture)
        return Scene(
            camera=_camera_from_dict(data['camera']),
            light=_light_from_dict(data['light']),
            objects=[_object_from_dict(entry) for entry in data['objects']],
            materials=materials,
            background=_tuple3(data.get('background', (0.0, 0.0, 0.0))),
            textures=textures,
        )

    def to_dict(self, scene: Scene) -> Dict[str, Any]:
        camera = scene.camera
        light = scene.light
        light_data: Dict[str, Any] = {'kind': light.kind.value, 'intensity': list(light.intensity)}
        if light.position is not None:
            light_data['position'] = list(light.position)
        if light.direction is not None:
            light_data['direction'] = list(light.direction)
        return {
            'camera': {
                'position': list(camera.position),
                'look_at': list(camera.look_at),
                'up': list(camera.up),
                'fov': camera.fov,
                'width': camera.width,
                'height': camera.height,
            },
            'light': light_data,
            'background': list(scene.background),
            'materials': {name: _material_to_dict(m) for name, m in scene.materials.items()},
            'objects': [_object_to_dict(obj) for obj in scene.objects],
        }

    def save(self, scene: Scene, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(scene), indent=2))
        return path

    def load_texture(self, path: PathLike) -> AlbedoTexture:
        """sRGB-ish 8-bit image to a linear [0, 1] albedo texture (gamma 2.2)."""
        try:
            with Image.open(path) as image:
                pixels = np.asarray(image.convert('RGB'), dtype=np.float64) / 255.0
        except OSError as e:
            raise format_error(str(path), f"unreadable texture: {e}", SceneFormatError)
        return AlbedoTexture(pixels ** 2.2)
