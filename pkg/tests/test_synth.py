"""Synthetic scene generator and degradation operators."""

import math

import numpy as np
import pytest

from splatcorr import quat
from splatcorr.render import render
from splatcorr.scene import validate_camera, validate_scene
from splatcorr.synth import MOTIONS, PALETTE, SynthSpec, degrade, gen_scene, make_arc_cameras
from splatcorr.temporal import splat_world_pose


def spec(**kwargs):
    defaults = dict(
        seed=3, n_splats=12, motion="static", extent=2.0, n_cameras=3, n_frames=5,
        width=64, height=48,
    )
    defaults.update(kwargs)
    return SynthSpec(**defaults)


class TestSpecValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(motion="wobble"),
            dict(n_cameras=1),
            dict(n_frames=2),
            dict(n_splats=0),
            dict(extent=0.0),
            dict(width=8),
        ],
    )
    def test_rejected(self, kwargs):
        with pytest.raises(ValueError):
            spec(**kwargs).validate()

    def test_all_motions_accepted(self):
        for motion in MOTIONS:
            spec(motion=motion).validate()


class TestGenScene:
    def test_deterministic(self):
        scene_a, cams_a = gen_scene(spec())
        scene_b, cams_b = gen_scene(spec())
        assert len(scene_a.splats) == len(scene_b.splats)
        for sa, sb in zip(scene_a.splats, scene_b.splats):
            assert np.array_equal(sa.position, sb.position)
            assert np.array_equal(sa.rotation, sb.rotation)
            assert np.array_equal(sa.scale, sb.scale)
            assert sa.opacity == sb.opacity
            assert np.array_equal(sa.color, sb.color)
        for ca, cb in zip(cams_a, cams_b):
            assert np.array_equal(ca.world_to_camera, cb.world_to_camera)

    def test_seeds_differ(self):
        scene_a, _ = gen_scene(spec(seed=1))
        scene_b, _ = gen_scene(spec(seed=2))
        assert not np.array_equal(scene_a.splats[0].position, scene_b.splats[0].position)

    def test_scene_is_valid(self):
        for motion in MOTIONS:
            scene, cameras = gen_scene(spec(motion=motion))
            assert validate_scene(scene) == []
            for cam in cameras:
                assert validate_camera(cam) == []

    def test_palette_colors_only(self):
        scene, _ = gen_scene(spec(n_splats=30))
        rows = {tuple(row) for row in PALETTE}
        for s in scene.splats:
            assert tuple(s.color) in rows

    def test_static_frames_identical(self):
        scene, cameras = gen_scene(spec())
        first = render(scene, cameras[0], 0.0)
        last = render(scene, cameras[0], float(scene.num_frames - 1))
        assert np.array_equal(first.rgb, last.rgb)

    def test_rigid_translation_equals_shifted_camera(self):
        scene, cameras = gen_scene(spec(motion="rigid-translation", n_splats=15))
        cam = cameras[1]
        t = float(scene.num_frames - 1)
        moved = render(scene, cam, t)

        v = t * scene.splats[0].displacement
        shifted = type(cam)(
            fx=cam.fx, fy=cam.fy, cx=cam.cx, cy=cam.cy,
            world_to_camera=np.column_stack(
                [cam.rotation, cam.translation + cam.rotation @ v]
            ),
            width=cam.width, height=cam.height,
        )
        still = render(scene, shifted, 0.0)
        assert np.max(np.abs(moved.rgb - still.rgb)) < 1e-4

    def test_rigid_rotation_pose(self):
        scene, _ = gen_scene(spec(motion="rigid-rotation", n_frames=11))
        assert len(scene.groups) == 2
        assert all(s.group_id == 1 for s in scene.splats)
        total = math.radians(40.0)
        expected_rot = np.array(
            [math.cos(total / 2.0), 0.0, math.sin(total / 2.0), 0.0]
        )
        pose0 = splat_world_pose(scene, 0, 0.0)
        pose1 = splat_world_pose(scene, 0, 10.0)
        assert np.allclose(pose0.position, scene.splats[0].position)
        assert np.allclose(pose1.position, quat.to_matrix(expected_rot) @ scene.splats[0].position)

    def test_two_group_layout(self):
        scene, _ = gen_scene(spec(motion="two-group", n_splats=10, extent=2.0))
        half = 5
        for s in scene.splats[:half]:
            assert s.position[0] < 0
            assert s.displacement[1] > 0 and s.displacement[2] == 0
        for s in scene.splats[half:]:
            assert s.position[0] > 0
            assert s.displacement[2] > 0 and s.displacement[1] == 0

    def test_arc_cameras_aim_at_center(self):
        cameras = make_arc_cameras(spec(n_cameras=4, extent=2.0))
        assert len(cameras) == 4
        for cam in cameras:
            eye = -cam.rotation.T @ cam.translation
            assert np.linalg.norm(eye) == pytest.approx(1.8 * 2.0)
            toward = -eye / np.linalg.norm(eye)
            assert np.dot(cam.optical_axis_world, toward) == pytest.approx(1.0, abs=1e-12)

    def test_camera_intrinsics(self):
        cams = make_arc_cameras(spec(width=64, height=48))
        assert cams[0].fx == 64.0
        assert cams[0].cx == 31.5
        assert cams[0].cy == 23.5


class TestDegrade:
    def make(self, n=10):
        scene, _ = gen_scene(spec(n_splats=n))
        return scene

    def test_remove_fraction_zero(self):
        scene = self.make()
        out, records = degrade(scene, [{"op": "remove-fraction", "fraction": 0.0}])
        assert len(out.splats) == 10
        assert records == [{"op": "remove-fraction", "removed_indices": []}]

    def test_remove_fraction_all(self):
        out, _ = degrade(self.make(), [{"op": "remove-fraction", "fraction": 1.0}])
        assert out.splats == []

    def test_remove_fraction_count_and_record(self):
        scene = self.make()
        out, records = degrade(scene, [{"op": "remove-fraction", "fraction": 0.3}], seed=5)
        removed = records[0]["removed_indices"]
        assert len(out.splats) == 7
        assert len(removed) == 3
        assert removed == sorted(set(removed))
        assert all(0 <= i < 10 for i in removed)
        # Input scene untouched.
        assert len(scene.splats) == 10

    def test_remove_fraction_seeded(self):
        scene = self.make()
        _, rec_a = degrade(scene, [{"op": "remove-fraction", "fraction": 0.5}], seed=9)
        _, rec_b = degrade(scene, [{"op": "remove-fraction", "fraction": 0.5}], seed=9)
        _, rec_c = degrade(scene, [{"op": "remove-fraction", "fraction": 0.5}], seed=10)
        assert rec_a == rec_b
        assert rec_a != rec_c

    def test_remove_fraction_bad_fraction(self):
        with pytest.raises(ValueError):
            degrade(self.make(), [{"op": "remove-fraction", "fraction": 1.5}])

    def test_remove_region(self):
        scene = self.make()
        inside = [
            i
            for i in range(len(scene.splats))
            if np.all(splat_world_pose(scene, i, 0.0).position >= [-1, -1, -1])
            and np.all(splat_world_pose(scene, i, 0.0).position <= [1, 1, 1])
        ]
        out, records = degrade(
            scene, [{"op": "remove-region", "box": [-1, -1, -1, 1, 1, 1]}]
        )
        assert records[0]["removed_indices"] == inside
        assert len(out.splats) == len(scene.splats) - len(inside)

    def test_remove_region_bad_box(self):
        with pytest.raises(ValueError):
            degrade(self.make(), [{"op": "remove-region", "box": [0, 0, 0, 1]}])

    def test_inflate_occluder(self):
        scene = self.make()
        before = scene.splats[4].scale.copy()
        out, records = degrade(scene, [{"op": "inflate-occluder", "index": 4, "factor": 3.0}])
        assert np.array_equal(out.splats[4].scale, before * 3.0)
        assert np.array_equal(scene.splats[4].scale, before)
        assert records == [{"op": "inflate-occluder", "index": 4, "factor": 3.0}]

    def test_inflate_occluder_bad_args(self):
        with pytest.raises(ValueError):
            degrade(self.make(), [{"op": "inflate-occluder", "index": 99, "factor": 2.0}])
        with pytest.raises(ValueError):
            degrade(self.make(), [{"op": "inflate-occluder", "index": 0, "factor": 0.0}])

    def test_perturb_displacement(self):
        scene = self.make()
        out, _ = degrade(scene, [{"op": "perturb-displacement", "sigma": 0.05}], seed=2)
        deltas = [
            float(np.linalg.norm(o.displacement - s.displacement))
            for o, s in zip(out.splats, scene.splats)
        ]
        assert all(d > 0 for d in deltas)
        assert max(d for d in deltas) < 1.0

    def test_perturb_displacement_zero_sigma(self):
        scene = self.make()
        out, _ = degrade(scene, [{"op": "perturb-displacement", "sigma": 0.0}])
        for o, s in zip(out.splats, scene.splats):
            assert np.array_equal(o.displacement, s.displacement)

    def test_perturb_displacement_negative_sigma(self):
        with pytest.raises(ValueError):
            degrade(self.make(), [{"op": "perturb-displacement", "sigma": -0.1}])

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            degrade(self.make(), [{"op": "sandblast"}])

    def test_ops_run_in_order(self):
        scene = self.make()
        out, records = degrade(
            scene,
            [
                {"op": "inflate-occluder", "index": 0, "factor": 2.0},
                {"op": "remove-fraction", "fraction": 1.0},
            ],
        )
        assert out.splats == []
        assert [r["op"] for r in records] == ["inflate-occluder", "remove-fraction"]
