"""Renderer tests: projection math, compositing, depth, determinism.

The projection path is checked against a finite-difference Jacobian so the
analytic screen covariance has an oracle that does not share its code.
"""

import math

import numpy as np
import pytest

from splatcorr.render import (
    backproject_pixel,
    build_covariance,
    project_point,
    project_splat,
    render,
)
from splatcorr.scene import Scene

from .conftest import make_camera, make_splat, single_splat_scene, static_group

QZ90 = np.array([math.sqrt(0.5), 0.0, 0.0, math.sqrt(0.5)])


def numeric_pixel_jacobian(point, camera, h=1e-5):
    """Central-difference Jacobian of the world -> pixel map."""
    jac = np.zeros((2, 3))
    for k in range(3):
        hi = np.array(point, dtype=np.float64)
        lo = hi.copy()
        hi[k] += h
        lo[k] -= h
        jac[:, k] = (project_point(hi, camera)[0] - project_point(lo, camera)[0]) / (2 * h)
    return jac


class TestCovariance:
    def test_axis_aligned(self):
        cov = build_covariance(np.array([1.0, 0.0, 0.0, 0.0]), np.array([2.0, 1.0, 3.0]))
        assert np.allclose(cov, np.diag([4.0, 1.0, 9.0]))

    def test_rotation_permutes_axes(self):
        # 90 degrees about z swaps the x and y extents.
        cov = build_covariance(QZ90, np.array([2.0, 1.0, 1.0]))
        assert np.allclose(cov, np.diag([1.0, 4.0, 1.0]), atol=1e-12)

    def test_symmetric_positive_definite(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            cov = build_covariance(q, rng.uniform(0.1, 2.0, size=3))
            assert np.allclose(cov, cov.T)
            assert np.all(np.linalg.eigvalsh(cov) > 0)


class TestProjection:
    def test_known_point(self, camera):
        uv, z = project_point(np.array([0.5, 0.0, 1.0]), camera)
        assert z == 1.0
        assert np.allclose(uv, [100.0, 50.0])

    def test_behind_camera_nan(self, camera):
        uv, z = project_point(np.array([0.0, 0.0, -1.0]), camera)
        assert z == -1.0
        assert np.all(np.isnan(uv))

    def test_round_trip(self, camera):
        rng = np.random.default_rng(1)
        for _ in range(25):
            p = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 5)])
            uv, z = project_point(p, camera)
            assert np.allclose(backproject_pixel(uv, z, camera), p, atol=1e-12)

    def test_round_trip_rotated_camera(self):
        from splatcorr import quat

        cam = make_camera(rotation=quat.to_matrix(QZ90), translation=np.array([0.1, -0.2, 0.3]))
        p = np.array([0.3, 0.4, 2.0])
        uv, z = project_point(p, cam)
        assert np.allclose(backproject_pixel(uv, z, cam), p, atol=1e-12)

    def test_backproject_rejects_nonpositive_depth(self, camera):
        with pytest.raises(ValueError):
            backproject_pixel(np.array([50.0, 50.0]), 0.0, camera)


class TestProjectSplat:
    def test_on_axis_covariance(self, camera):
        cov = build_covariance(np.array([1.0, 0.0, 0.0, 0.0]), np.ones(3))
        ps = project_splat(np.array([0.0, 0.0, 1.0]), cov, np.ones(3), 0.9, camera)
        # sigma = 1 world unit at z = 1 is fx = 100 px, plus regularization.
        assert np.allclose(ps.cov2d, np.diag([1e4 + 0.3, 1e4 + 0.3]))
        assert ps.camera_depth == 1.0
        assert np.allclose(ps.mean2d, [50.0, 50.0])

    def test_near_plane_culling(self, camera):
        cov = np.eye(3) * 0.01
        assert project_splat(np.array([0.0, 0.0, -1.0]), cov, np.ones(3), 0.9, camera) is None
        assert project_splat(np.array([0.0, 0.0, 1e-3]), cov, np.ones(3), 0.9, camera) is None

    def test_off_screen_not_culled(self, camera):
        cov = np.eye(3) * 0.01
        ps = project_splat(np.array([50.0, 0.0, 1.0]), cov, np.ones(3), 0.9, camera)
        assert ps is not None
        assert ps.mean2d[0] > camera.width

    def test_covariance_matches_numeric_jacobian(self):
        from splatcorr import quat

        rng = np.random.default_rng(2)
        cam = make_camera(
            fx=120.0, fy=80.0, rotation=quat.to_matrix(QZ90), translation=np.array([0.2, 0.1, 0.5])
        )
        for _ in range(10):
            pos = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(1.5, 4)])
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            cov = build_covariance(q, rng.uniform(0.05, 0.3, size=3))
            ps = project_splat(pos, cov, np.ones(3), 0.9, cam)
            # The numeric Jacobian of the full world -> pixel map already
            # includes the camera rotation.
            jac = numeric_pixel_jacobian(pos, cam)
            expected = jac @ cov @ jac.T
            assert np.allclose(ps.cov2d - 0.3 * np.eye(2), expected, rtol=1e-5, atol=1e-6)


class TestRender:
    def test_background_is_black(self, camera):
        out = render(single_splat_scene(), camera, 0.0)
        assert np.all(out.rgb[0, 0] == 0.0)
        assert out.alpha[0, 0] == 0.0
        assert math.isnan(out.depth[0, 0])
        assert not out.depth_valid[0, 0]

    def test_center_alpha_and_depth(self, camera):
        out = render(single_splat_scene(position=(0.0, 0.0, 1.0)), camera, 0.0)
        # Splat center lands exactly on pixel (50, 50): alpha = opacity.
        assert out.alpha[50, 50] == 0.9
        assert out.depth[50, 50] == 1.0
        assert out.depth_valid[50, 50]
        assert np.array_equal(out.rgb[50, 50], [0.9, 0.0, 0.0])

    def test_gaussian_falloff(self, camera):
        out = render(single_splat_scene(position=(0.0, 0.0, 1.0)), camera, 0.0)
        var = 100.0 + 0.3
        for dx in (5, 10, 20):
            expected = 0.9 * math.exp(-0.5 * dx * dx / var)
            assert out.alpha[50, 50 + dx] == pytest.approx(expected, abs=1e-12)

    def test_alpha_clamped(self, camera):
        out = render(single_splat_scene(position=(0.0, 0.0, 1.0), opacity=1.0), camera, 0.0)
        assert out.alpha[50, 50] == 0.99

    def test_small_contributions_skipped(self, camera):
        out = render(single_splat_scene(position=(0.0, 0.0, 1.0)), camera, 0.0)
        # Bounding box corner is ~4.2 sigma out: inside the box, but the
        # alpha there falls under 1/255 and must be dropped exactly.
        assert out.rgb[19, 19, 0] == 0.0
        assert out.alpha[19, 19] == 0.0
        # The box edge midpoint is at 3 sigma and still contributes.
        assert out.rgb[50, 19, 0] > 0.0
        # One pixel further out is beyond the box.
        assert out.alpha[50, 18] == 0.0

    def test_two_splat_compositing(self):
        cam = make_camera(cx=16.0, cy=16.0, width=33, height=33)
        scene = Scene(
            splats=[
                make_splat([0.0, 0.0, 1.0], opacity=0.5, color=[1.0, 0.0, 0.0], scale=[0.01] * 3),
                make_splat([0.0, 0.0, 2.0], opacity=0.5, color=[0.0, 0.0, 1.0], scale=[0.02] * 3),
            ],
            groups=[static_group()],
            num_frames=2,
        )
        out = render(scene, cam, 0.0)
        assert np.array_equal(out.rgb[16, 16], [0.5, 0.0, 0.25])
        assert out.alpha[16, 16] == 0.75
        assert out.depth[16, 16] == pytest.approx(4.0 / 3.0, abs=1e-15)

    def test_equal_depth_keeps_splat_order(self):
        cam = make_camera(cx=16.0, cy=16.0, width=33, height=33)

        def build(first_red):
            red = make_splat([0.0, 0.0, 1.0], opacity=0.5, color=[1.0, 0.0, 0.0], scale=[0.01] * 3)
            blue = make_splat([0.0, 0.0, 1.0], opacity=0.5, color=[0.0, 0.0, 1.0], scale=[0.01] * 3)
            order = [red, blue] if first_red else [blue, red]
            return Scene(splats=order, groups=[static_group()], num_frames=2)

        red_first = render(build(True), cam, 0.0)
        blue_first = render(build(False), cam, 0.0)
        assert np.array_equal(red_first.rgb[16, 16], [0.5, 0.0, 0.25])
        assert np.array_equal(blue_first.rgb[16, 16], [0.25, 0.0, 0.5])

    def test_depth_sorting(self):
        # A nearer splat listed second still occludes the farther one.
        cam = make_camera(cx=16.0, cy=16.0, width=33, height=33)
        scene = Scene(
            splats=[
                make_splat([0.0, 0.0, 3.0], opacity=0.95, color=[0.0, 1.0, 0.0], scale=[0.03] * 3),
                make_splat([0.0, 0.0, 1.0], opacity=0.95, color=[1.0, 0.0, 0.0], scale=[0.01] * 3),
            ],
            groups=[static_group()],
            num_frames=2,
        )
        out = render(scene, cam, 0.0)
        assert out.rgb[16, 16, 0] == 0.95
        assert out.rgb[16, 16, 1] == pytest.approx(0.05 * 0.95, abs=1e-15)

    def test_displacement_moves_pixel(self, camera):
        scene = single_splat_scene(position=(0.0, 0.0, 2.0), displacement=[0.01, 0.0, 0.0],
                                   num_frames=11)
        at0 = render(scene, camera, 0.0)
        at10 = render(scene, camera, 10.0)
        assert int(np.argmax(at0.rgb[50, :, 0])) == 50
        assert int(np.argmax(at10.rgb[50, :, 0])) == 55

    def test_thread_count_is_invisible(self, camera):
        rng = np.random.default_rng(3)
        splats = [
            make_splat(
                [rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(1, 4)],
                opacity=rng.uniform(0.3, 1.0),
                color=rng.uniform(0, 1, size=3),
                scale=rng.uniform(0.02, 0.2, size=3),
            )
            for _ in range(40)
        ]
        scene = Scene(splats=splats, groups=[static_group()], num_frames=2)
        base = render(scene, camera, 0.0, threads=1)
        for threads in (2, 4, 8):
            out = render(scene, camera, 0.0, threads=threads)
            assert np.array_equal(base.rgb, out.rgb)
            assert np.array_equal(base.alpha, out.alpha)
            assert np.array_equal(base.depth, out.depth, equal_nan=True)

    def test_empty_scene(self, camera):
        scene = Scene(splats=[], groups=[static_group()], num_frames=1)
        out = render(scene, camera, 0.0)
        assert np.all(out.rgb == 0.0)
        assert np.all(np.isnan(out.depth))
