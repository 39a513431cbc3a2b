"""Scene model construction and validation."""

import numpy as np
import pytest

from splatcorr.scene import Camera, Group, Scene, Splat, validate_camera, validate_scene

from .conftest import make_camera, make_splat, static_group


def dynamic_group(k=3, interval=5.0):
    rots = np.tile([1.0, 0.0, 0.0, 0.0], (k, 1))
    return Group(
        keyframe_positions=np.zeros((k, 3)),
        keyframe_rotations=rots,
        keyframe_interval=interval,
    )


class TestSplat:
    def test_coerces_to_float_arrays(self):
        s = make_splat([1, 2, 3])
        assert s.position.dtype == np.float64
        assert s.position.shape == (3,)
        assert isinstance(s.opacity, float)

    def test_rejects_wrong_shapes(self):
        with pytest.raises(ValueError):
            make_splat([1.0, 2.0])
        with pytest.raises(ValueError):
            make_splat([0.0, 0.0, 0.0], rotation=[1.0, 0.0, 0.0])

    def test_copy_is_deep(self):
        s = make_splat([0.0, 0.0, 1.0])
        c = s.copy()
        c.position[0] = 99.0
        c.opacity_center[0] = 5.0
        assert s.position[0] == 0.0
        assert s.opacity_center[0] == 0.0

    def test_temporal_defaults(self):
        s = make_splat([0.0, 0.0, 1.0])
        assert not s.is_dynamic
        assert np.array_equal(s.opacity_center, [0.0, 0.0])
        assert np.array_equal(s.opacity_variance, [1.0, 1.0])


class TestGroup:
    def test_span(self):
        g = dynamic_group(k=4, interval=2.5)
        assert g.num_keyframes == 4
        assert g.span == 7.5

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            Group(np.zeros((3, 2)), np.tile([1.0, 0, 0, 0], (3, 1)), 1.0)
        with pytest.raises(ValueError):
            Group(np.zeros((3, 3)), np.tile([1.0, 0, 0, 0], (2, 1)), 1.0)
        with pytest.raises(ValueError):
            Group(np.zeros((2, 3)), np.tile([1.0, 0, 0, 0], (2, 1)), 0.0)

    def test_copy_is_deep(self):
        g = dynamic_group()
        c = g.copy()
        c.keyframe_positions[0, 0] = 42.0
        assert g.keyframe_positions[0, 0] == 0.0


class TestCamera:
    def test_properties(self):
        cam = make_camera()
        assert cam.rotation.shape == (3, 3)
        assert cam.translation.shape == (3,)
        assert np.allclose(cam.optical_axis_world, [0.0, 0.0, 1.0])

    def test_world_to_camera_shape(self):
        with pytest.raises(ValueError):
            Camera(fx=1, fy=1, cx=0, cy=0, world_to_camera=np.eye(3), width=2, height=2)


class TestValidateScene:
    def make_scene(self):
        return Scene(splats=[make_splat([0.0, 0.0, 2.0])], groups=[static_group()], num_frames=3)

    def test_clean_scene_passes(self):
        assert validate_scene(self.make_scene()) == []

    def test_num_frames(self):
        scene = self.make_scene()
        scene.num_frames = 0
        assert any("num_frames" in p for p in validate_scene(scene))

    def test_group_zero_must_be_static(self):
        scene = self.make_scene()
        scene.groups[0].is_static = False
        problems = validate_scene(scene)
        assert any("static" in p for p in problems)

    def test_extra_static_group_flagged(self):
        scene = self.make_scene()
        extra = static_group()
        scene.groups.append(extra)
        assert any("static groups are [0, 1]" in p for p in validate_scene(scene))

    def test_nonstatic_needs_two_keyframes(self):
        scene = self.make_scene()
        g = Group(np.zeros((1, 3)), np.array([[1.0, 0, 0, 0]]), 1.0)
        scene.groups.append(g)
        assert any("need >= 2" in p for p in validate_scene(scene))

    def test_keyframe_rotation_norm(self):
        scene = self.make_scene()
        g = dynamic_group()
        g.keyframe_rotations[1] = [2.0, 0.0, 0.0, 0.0]
        scene.groups.append(g)
        assert any("keyframe 1 rotation norm" in p for p in validate_scene(scene))

    def test_group_id_range(self):
        scene = self.make_scene()
        scene.splats[0].group_id = 5
        assert any("group_id 5 out of range" in p for p in validate_scene(scene))

    def test_splat_rotation_norm(self):
        scene = self.make_scene()
        scene.splats[0].rotation = np.array([1.0, 1.0, 0.0, 0.0])
        assert any("rotation norm" in p for p in validate_scene(scene))

    def test_scale_positive(self):
        scene = self.make_scene()
        scene.splats[0].scale = np.array([0.1, -0.1, 0.1])
        assert any("non-positive" in p for p in validate_scene(scene))

    def test_opacity_range(self):
        scene = self.make_scene()
        scene.splats[0].opacity = 1.5
        assert any("opacity 1.5" in p for p in validate_scene(scene))

    def test_color_range(self):
        scene = self.make_scene()
        scene.splats[0].color = np.array([0.0, 2.0, 0.0])
        assert any("color" in p for p in validate_scene(scene))

    def test_opacity_window_ordering(self):
        scene = self.make_scene()
        scene.splats[0].opacity_center = np.array([3.0, 1.0])
        assert any("opacity_center start" in p for p in validate_scene(scene))

    def test_opacity_variance_positive(self):
        scene = self.make_scene()
        scene.splats[0].opacity_variance = np.array([1.0, 0.0])
        assert any("opacity_variance" in p for p in validate_scene(scene))

    def test_multiple_violations_all_reported(self):
        scene = self.make_scene()
        scene.splats[0].opacity = -1.0
        scene.splats[0].scale = np.array([0.0, 0.1, 0.1])
        assert len(validate_scene(scene)) == 2


class TestValidateCamera:
    def test_clean(self):
        assert validate_camera(make_camera()) == []

    def test_non_orthonormal(self):
        cam = make_camera()
        w2c = cam.world_to_camera.copy()
        w2c[0, 0] = 2.0
        cam.world_to_camera = w2c
        assert any("orthonormal" in p for p in validate_camera(cam))

    def test_reflection_rejected(self):
        cam = make_camera()
        w2c = cam.world_to_camera.copy()
        w2c[:, :3] = np.diag([1.0, 1.0, -1.0])
        cam.world_to_camera = w2c
        assert any("determinant" in p for p in validate_camera(cam))

    def test_focal_and_size(self):
        cam = make_camera(fx=-1.0)
        assert any("focal" in p for p in validate_camera(cam))
        cam = make_camera(width=0)
        assert any("image size" in p for p in validate_camera(cam))


def test_scene_copy_independent():
    scene = Scene(
        splats=[make_splat([0.0, 0.0, 2.0])], groups=[static_group()], num_frames=4
    )
    c = scene.copy()
    c.splats[0].color[0] = 0.0
    c.groups[0].keyframe_positions[0, 0] = 7.0
    assert scene.splats[0].color[0] == 1.0
    assert scene.groups[0].keyframe_positions[0, 0] == 0.0
