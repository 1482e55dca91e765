"""
Unit tests for procedural yarn geometry and geometry maps.
"""

import numpy as np
import pytest

from src.neural_weave.business.geometry import (
    MapSynthesizer,
    YarnSurface,
    downsample_maps,
    resolve_resolution,
    synthesize_geometry_maps,
)
from src.neural_weave.business.weave import build_weave_matrix
from src.neural_weave.domain.enums import YarnId
from src.neural_weave.domain.exceptions import GeometryError
from src.neural_weave.domain.models import MaterialSpec, WeaveKind


def plain_surface(beta: float = 1.0, twist: float = 0.0) -> YarnSurface:
    return YarnSurface(build_weave_matrix(WeaveKind.plain()), twist, 30.0, 0.2, beta, 64)


@pytest.mark.unit
class TestYarnSurface:
    """Test the continuous yarn surface."""

    def test_weft_crown_frame(self):
        """At the crown of a straight weft float the fiber runs along +u and the normal is up."""
        normal, axis, _, yarn = plain_surface().frame_at(0.75, 0.25)

        assert yarn == YarnId.WEFT
        assert np.allclose(normal, [0.0, 0.0, 1.0], atol=1e-9)
        assert np.allclose(axis, [1.0, 0.0, 0.0], atol=1e-9)

    def test_warp_crown_frame(self):
        """Warp floats run along +v."""
        normal, axis, _, yarn = plain_surface().frame_at(0.25, 0.25)

        assert yarn == YarnId.WARP
        assert np.allclose(normal, [0.0, 0.0, 1.0], atol=1e-9)
        assert np.allclose(axis, [0.0, 1.0, 0.0], atol=1e-9)

    def test_normal_matches_finite_difference(self):
        """A quarter of the way across a weft yarn the normal follows the height gradient."""
        surface = plain_surface(beta=1.0)
        u, v = 0.75, 0.35  # lateral offset 0.2 of a 0.8-wide band
        eps = 1e-6
        dz_du = (surface.height(u + eps, v) - surface.height(u - eps, v)) / (2 * eps)
        dz_dv = (surface.height(u, v + eps) - surface.height(u, v - eps)) / (2 * eps)
        expected = np.array([-dz_du, -dz_dv, 1.0])
        expected /= np.linalg.norm(expected)

        normal, _, _, yarn = surface.frame_at(u, v)

        assert yarn == YarnId.WEFT
        assert np.allclose(normal, expected, atol=1e-3)
        assert normal[1] > 0.0

    def test_zero_height_scale_is_flat(self):
        """beta = 0 leaves every normal pointing up."""
        maps = synthesize_geometry_maps(build_weave_matrix(WeaveKind.twill(3)), 30.0, 40.0, 0.2, 0.0, 48)

        assert np.allclose(maps.normal[..., 2], 1.0)

    def test_tiling_is_exact(self):
        """Frames at (u + 1, v) equal frames at (u, v)."""
        surface = plain_surface()
        grid = (np.arange(64) + 0.5) / 64
        v, u = np.meshgrid(grid, grid, indexing='ij')

        base = surface.frames(u, v)
        shifted = surface.frames(u + 1.0, v)

        for a, b in zip(base, shifted):
            assert np.array_equal(a, b)

    def test_normal_z_non_increasing_in_beta(self):
        """Steeper relief tilts normals further from the surface normal."""
        weave = build_weave_matrix(WeaveKind.twill(3))
        grid = (np.arange(48) + 0.5) / 48
        v, u = np.meshgrid(grid, grid, indexing='ij')
        previous = None
        for beta in (0.0, 0.5, 1.0, 2.0):
            normal, _, _, _ = YarnSurface(weave, 0.0, 30.0, 0.2, beta, 48).frames(u, v)
            if previous is not None:
                assert np.all(normal[..., 2] <= previous + 1e-12)
            previous = normal[..., 2]

    def test_twist_rotates_orientation_in_tangent_plane(self):
        """Twist turns the fiber axis about the normal by the twist angle."""
        normal, axis, _, _ = plain_surface(twist=30.0).frame_at(0.75, 0.25)

        assert abs(float(axis @ normal)) < 1e-9
        assert np.isclose(float(axis @ np.array([1.0, 0.0, 0.0])), np.cos(np.radians(30.0)))

    @pytest.mark.parametrize("kind, gap", [
        (WeaveKind.plain(), 0.2),
        (WeaveKind.twill(3), 0.2),
        (WeaveKind.satin(5, 10), 0.2),
        (WeaveKind.twill(5), 0.0),
    ])
    def test_height_field_is_continuous(self, kind, gap):
        """No cliffs: neighbouring heights differ by at most the local slope times the step."""
        surface = YarnSurface(build_weave_matrix(kind), 0.0, 40.0, gap, 1.5, 64)
        step = 1.0 / 8192
        line = np.arange(8192) * step
        for offset in (0.03, 0.21, 0.5, 0.77):
            fixed = np.full_like(line, offset)
            for u, v, axis in ((line, fixed, 0), (fixed, line, 1)):
                heights = surface.height(u, v)
                slope = np.abs(surface.gradient(u, v)[axis])
                jumps = np.abs(np.diff(np.append(heights, heights[0])))
                bound = np.maximum(slope, np.roll(slope, -1)) * step

                assert np.all(jumps <= 1.05 * bound + 1e-9)

    def test_float_ends_and_gaps_sit_at_zero(self, twill_maps):
        """Gap texels share the height of the lobe edges they border."""
        gap = twill_maps.yarn_id == YarnId.GAP

        assert np.all(twill_maps.height[gap] == 0.0)
        assert twill_maps.height.min() >= -1e-12
        assert twill_maps.height.max() <= 1.0

    def test_crown_tilt_bounded_by_inclination(self):
        """Along a long satin weft float the crown centerline slopes at most tan(u), reaching it at the ends."""
        inclination = 30.0
        surface = YarnSurface(build_weave_matrix(WeaveKind.satin(8, 8)), 0.0, inclination, 0.2, 1.0, 64)
        u = np.arange(4096) / 4096
        v = np.full_like(u, 2.5 / 8)

        _, yarn, z_u, _ = surface.evaluate(u, v)
        crown = np.abs(z_u[yarn == YarnId.WEFT])

        tan_u = np.tan(np.radians(inclination))
        assert crown.max() <= tan_u + 1e-9
        assert crown.max() == pytest.approx(tan_u, rel=0.01)

    @pytest.mark.parametrize("kwargs", [dict(gap=1.0), dict(beta=-1.0), dict(inclination=90.0), dict(resolution=0)])
    def test_invalid_parameters(self, kwargs):
        params = dict(twist=0.0, inclination=30.0, gap=0.2, beta=1.0, resolution=32)
        params.update(kwargs)
        with pytest.raises(GeometryError):
            YarnSurface(build_weave_matrix(WeaveKind.plain()), **params)


@pytest.mark.unit
class TestGeometryMaps:
    """Test synthesized maps."""

    def test_gap_fraction_matches_gap_ratio(self):
        maps = synthesize_geometry_maps(build_weave_matrix(WeaveKind.plain()), 0.0, 30.0, 0.2, 1.0, 80)

        assert abs(maps.gap_fraction - 0.2) < 0.02

    def test_yarn_ids_follow_weave_matrix(self, twill_maps):
        """Non-gap texels belong to the over yarn of their cell."""
        weave = build_weave_matrix(WeaveKind.twill(3))
        cells = twill_maps.resolution // 3
        rows, cols = np.indices(twill_maps.yarn_id.shape)
        warp_cell = weave.warp_over[rows // cells, cols // cells]
        yarn = twill_maps.yarn_id

        assert np.all(yarn[(yarn != YarnId.GAP) & warp_cell] == YarnId.WARP)
        assert np.all(yarn[(yarn != YarnId.GAP) & ~warp_cell] == YarnId.WEFT)

    def test_gap_texels_are_flat_with_no_orientation(self, twill_maps):
        gap = twill_maps.yarn_id == YarnId.GAP

        assert gap.any()
        assert np.allclose(twill_maps.normal[gap], [0.0, 0.0, 1.0])
        assert np.allclose(twill_maps.orientation[gap], 0.0)

    def test_vectors_are_unit_length(self, twill_maps):
        yarn = twill_maps.yarn_id != YarnId.GAP

        assert np.allclose(np.linalg.norm(twill_maps.normal, axis=-1), 1.0)
        assert np.allclose(np.linalg.norm(twill_maps.orientation[yarn], axis=-1), 1.0)

    def test_maps_are_read_only(self, plain_maps):
        with pytest.raises(ValueError):
            plain_maps.normal[0, 0, 0] = 0.0

    def test_texel_lookup_wraps(self, plain_maps):
        assert plain_maps.texel(1.1, 0.3).yarn_id == plain_maps.texel(0.1, 0.3).yarn_id
        assert plain_maps.texel(-0.9, 0.3).yarn_id == plain_maps.texel(0.1, 0.3).yarn_id

    def test_resolution_must_divide_weave(self):
        with pytest.raises(GeometryError):
            synthesize_geometry_maps(build_weave_matrix(WeaveKind.twill(3)), 0.0, 30.0, 0.2, 1.0, 32)

    def test_resolve_resolution_rounds_up(self):
        assert resolve_resolution(build_weave_matrix(WeaveKind.twill(3)), 512) == 513
        assert resolve_resolution(build_weave_matrix(WeaveKind.satin(5, 10)), 512) == 520
        assert resolve_resolution(build_weave_matrix(WeaveKind.plain()), 512) == 512


@pytest.mark.unit
class TestDownsampleMaps:
    """Test the encoder input."""

    def test_shape_and_dtype(self, plain_maps):
        pooled = downsample_maps(plain_maps, 16)

        assert pooled.shape == (6, 16, 16)
        assert pooled.dtype == np.float32

    def test_pooled_normals_are_unit(self, plain_maps):
        pooled = downsample_maps(plain_maps, 16)

        assert np.allclose(np.linalg.norm(pooled[:3], axis=0), 1.0, atol=1e-5)

    def test_identity_resolution_keeps_normals(self, plain_maps):
        pooled = downsample_maps(plain_maps, plain_maps.resolution)

        assert np.allclose(pooled[:3].transpose(1, 2, 0), plain_maps.normal, atol=1e-6)

    def test_larger_than_map_rejected(self, plain_maps):
        with pytest.raises(GeometryError):
            downsample_maps(plain_maps, plain_maps.resolution * 2)


@pytest.mark.unit
class TestMapSynthesizer:
    """Test cached map synthesis."""

    def test_repeated_requests_hit_cache(self):
        synthesizer = MapSynthesizer(resolution=16, cache_size=2)
        spec = MaterialSpec(pattern=0, twist=0.0, inclination=30.0, roughness=0.5, height_scale=1.0)

        first = synthesizer.maps_for(spec)
        second = synthesizer.maps_for(spec.with_changes(roughness=0.9))

        assert first is second
        assert synthesizer.cache_stats()['hits'] == 1

    def test_resolution_follows_pattern(self):
        synthesizer = MapSynthesizer(resolution=16)
        spec = MaterialSpec(pattern=1, twist=0.0, inclination=30.0, roughness=0.5, height_scale=1.0)

        assert synthesizer.maps_for(spec).resolution == 18
