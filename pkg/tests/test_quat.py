"""Quaternion algebra checks, (w, x, y, z) order."""

import math

import numpy as np
import pytest

from splatcorr import quat

HALF_SQRT2 = math.sqrt(0.5)


def random_unit(rng):
    q = np.array([rng.normal() for _ in range(4)])
    return q / np.linalg.norm(q)


def test_normalize_unit_length():
    q = quat.normalize(np.array([1.0, 2.0, 3.0, 4.0]))
    assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-15)


def test_normalize_zero_raises():
    with pytest.raises(ValueError):
        quat.normalize(np.zeros(4))


def test_multiply_identity():
    e = np.array([1.0, 0.0, 0.0, 0.0])
    q = np.array([HALF_SQRT2, 0.0, HALF_SQRT2, 0.0])
    assert np.allclose(quat.multiply(e, q), q)
    assert np.allclose(quat.multiply(q, e), q)


def test_multiply_composes_rotations():
    # Two 90 degree turns about z make a 180 degree turn.
    qz90 = np.array([HALF_SQRT2, 0.0, 0.0, HALF_SQRT2])
    qz180 = quat.multiply(qz90, qz90)
    assert np.allclose(qz180, [0.0, 0.0, 0.0, 1.0], atol=1e-15)


def test_conjugate_inverts_unit_quaternion():
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = random_unit(rng)
        prod = quat.multiply(q, quat.conjugate(q))
        assert np.allclose(prod, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


class TestMatrix:
    def test_identity(self):
        assert np.array_equal(quat.to_matrix(np.array([1.0, 0.0, 0.0, 0.0])), np.eye(3))

    def test_z_rotation_90(self):
        m = quat.to_matrix(np.array([HALF_SQRT2, 0.0, 0.0, HALF_SQRT2]))
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(m, expected, atol=1e-15)

    def test_matrix_is_rotation(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            m = quat.to_matrix(random_unit(rng))
            assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)

    def test_round_trip_up_to_sign(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            q = random_unit(rng)
            back = quat.from_matrix(quat.to_matrix(q))
            assert min(np.abs(back - q).max(), np.abs(back + q).max()) < 1e-9

    def test_from_matrix_nonnegative_w(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            assert quat.from_matrix(quat.to_matrix(random_unit(rng)))[0] >= 0.0

    def test_from_matrix_branches(self):
        # Pure 180 degree turns exercise the trace <= 0 branches.
        for axis in range(3):
            m = -np.eye(3)
            m[axis, axis] = 1.0
            q = quat.from_matrix(m)
            assert np.allclose(quat.to_matrix(q), m, atol=1e-12)


def test_rotate_vector_matches_matrix():
    rng = np.random.default_rng(4)
    for _ in range(20):
        q = random_unit(rng)
        v = rng.normal(size=3)
        assert np.allclose(quat.rotate_vector(q, v), quat.to_matrix(q) @ v, atol=1e-12)


def test_rotate_vector_z90():
    qz90 = np.array([HALF_SQRT2, 0.0, 0.0, HALF_SQRT2])
    assert np.allclose(quat.rotate_vector(qz90, [1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)
