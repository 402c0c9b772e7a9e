import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from quadsmc.math3d import (NotARotation, NotSkewSymmetric, UnitQuaternion, axis_angle_quaternion,
                            from_rotation_matrix, hat, quat_conjugate, quat_multiply, rotate, sgn_plus,
                            to_rotation_matrix, vee)

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def random_quaternions(n, seed=0):
    q = np.random.default_rng(seed).normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def test_identity_is_neutral():
    q = random_quaternions(1)[0]
    assert np.allclose(quat_multiply(IDENTITY, q), q, atol=1e-15)


def test_product_with_conjugate_is_identity():
    for q in random_quaternions(50):
        assert np.allclose(quat_multiply(q, quat_conjugate(q)), IDENTITY, atol=1e-15)


def test_half_turn_about_x_doubles():
    c = np.cos(np.pi / 4)
    q = np.array([c, c, 0.0, 0.0])
    assert np.allclose(quat_multiply(q, q), [0.0, 1.0, 0.0, 0.0], atol=1e-15)


def test_product_is_unit_norm():
    p = quat_multiply(random_quaternions(100, 1), random_quaternions(100, 2))
    assert np.max(np.abs(np.linalg.norm(p, axis=1) - 1.0)) <= 1e-9


def test_conjugate_examples():
    assert np.array_equal(quat_conjugate(IDENTITY), IDENTITY)
    assert np.allclose(quat_conjugate([0.6, 0.8, 0.0, 0.0]), [0.6, -0.8, 0.0, 0.0])
    q = random_quaternions(1)[0]
    assert np.array_equal(quat_conjugate(quat_conjugate(q)), q)


def test_unit_quaternion_object_renormalises_and_rejects_zero():
    q = UnitQuaternion(2.0, np.array([0.0, 0.0, 0.0]))
    assert q.w == 1.0
    with pytest.raises(ValueError):
        UnitQuaternion(0.0, np.zeros(3))
    obj = quat_multiply(UnitQuaternion.identity(), UnitQuaternion.from_array([0.6, 0.8, 0, 0]))
    assert isinstance(obj, UnitQuaternion)


def test_rotate_examples():
    v = np.array([0.3, -1.2, 2.0])
    assert np.allclose(rotate(IDENTITY, v), v)
    q = axis_angle_quaternion([0, 0, 1], np.pi / 2)
    assert np.allclose(rotate(q, [1, 0, 0]), [0, 1, 0], atol=1e-15)
    for q in random_quaternions(100, 3):
        assert np.allclose(rotate(q, [0, 0, 1]), to_rotation_matrix(q)[:, 2], atol=1e-15)


def test_rotate_isometry_and_homogeneity():
    q = random_quaternions(1000, 4)
    v = np.random.default_rng(5).normal(size=(1000, 3))
    out = rotate(q, v)
    assert np.max(np.abs(np.linalg.norm(out, axis=1) / np.linalg.norm(v, axis=1) - 1)) <= 1e-12
    assert np.allclose(rotate(q, 3.5 * v), 3.5 * out, rtol=1e-12, atol=1e-14)


def test_rotate_matches_scipy_oracle():
    q = random_quaternions(1000, 6)
    v = np.random.default_rng(7).normal(size=(1000, 3))
    oracle = Rotation.from_quat(q[:, [1, 2, 3, 0]])
    assert np.allclose(rotate(q, v), oracle.apply(v), atol=1e-13)
    assert np.allclose(to_rotation_matrix(q), oracle.as_matrix(), atol=1e-13)


def test_composition_and_double_cover():
    q1, q2 = random_quaternions(500, 8), random_quaternions(500, 9)
    v = np.random.default_rng(10).normal(size=(500, 3))
    assert np.allclose(rotate(quat_multiply(q1, q2), v), rotate(q1, rotate(q2, v)), atol=1e-10)
    assert np.max(np.abs(to_rotation_matrix(q1) - to_rotation_matrix(-q1))) <= 1e-12


def test_matrix_round_trip_resolves_sign():
    assert np.array_equal(to_rotation_matrix(IDENTITY), np.eye(3))
    worst = 0.0
    for q in random_quaternions(1000, 11):
        back = from_rotation_matrix(to_rotation_matrix(q))
        assert back[0] >= 0.0
        worst = max(worst, np.max(np.abs(back - (q if q[0] >= 0 else -q))))
    assert worst < 1e-9


def test_from_rotation_matrix_near_half_turn():
    q = axis_angle_quaternion([1.0, 1.0, 0.0], np.pi - 1e-7)
    back = from_rotation_matrix(to_rotation_matrix(q))
    assert np.allclose(to_rotation_matrix(back), to_rotation_matrix(q), atol=1e-12)


def test_from_rotation_matrix_rejects_non_rotations():
    with pytest.raises(NotARotation):
        from_rotation_matrix(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(NotARotation):
        from_rotation_matrix(np.eye(3) * 1.01)


def test_ninety_degrees_matrix():
    R = to_rotation_matrix(axis_angle_quaternion([0, 0, 1], np.pi / 2))
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_hat_vee():
    assert np.array_equal(hat(np.zeros(3)), np.zeros((3, 3)))
    assert np.allclose(hat([1, 0, 0]) @ [0, 1, 0], [0, 0, 1])
    v = np.random.default_rng(12).normal(size=3)
    w = np.random.default_rng(13).normal(size=3)
    assert np.array_equal(vee(hat(v)), v)
    assert np.allclose(hat(v) @ w, np.cross(v, w))
    with pytest.raises(NotSkewSymmetric):
        vee(np.eye(3))


def test_sgn_plus():
    assert sgn_plus(0.0) == 1.0
    assert sgn_plus(-0.001) == -1.0
    assert sgn_plus(0.998) == 1.0
    assert np.array_equal(sgn_plus(np.array([0.0, -1.0, 2.0])), [1.0, -1.0, 1.0])
