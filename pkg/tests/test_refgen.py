import numpy as np
import pytest

from conftest import invariant_names
from quadsmc.math3d import NotSkewSymmetric, axis_angle_matrix, quat_derivative, to_rotation_matrix
from quadsmc.refgen import (FlatInput, SingularHeading, build_rotation_reference, continuous_sign,
                            desired_body_rates, remap_to_body_tangent)
from quadsmc.vehicle import GRAVITY, VehicleParams

M_HAT = VehicleParams().m_hat
HOVER = np.array([0.0, 0.0, M_HAT * GRAVITY])
Z = np.zeros(3)


def test_static_hover_reference():
    R, Rd, Rdd = build_rotation_reference(FlatInput(HOVER, Z, Z))
    assert np.allclose(R, np.eye(3), atol=1e-15)
    assert np.array_equal(Rd, np.zeros((3, 3))) and np.array_equal(Rdd, np.zeros((3, 3)))


def test_pure_yaw_reference():
    R, _, _ = build_rotation_reference(FlatInput(HOVER, Z, Z, psi_d=np.pi / 2))
    assert np.allclose(R, axis_angle_matrix([0, 0, 1], np.pi / 2), atol=1e-15)


def test_singular_heading_rejected():
    with pytest.raises(SingularHeading):
        build_rotation_reference(FlatInput(np.array([1.0, 0.0, 0.0]), Z, Z, psi_d=0.0))


def _kappa(t):
    # smooth, tilting thrust vector with closed-form derivatives
    k = np.array([0.1 * np.sin(t), 0.08 * np.cos(1.3 * t), 0.3 + 0.05 * np.sin(0.7 * t)])
    kd = np.array([0.1 * np.cos(t), -0.104 * np.sin(1.3 * t), 0.035 * np.cos(0.7 * t)])
    kdd = np.array([-0.1 * np.sin(t), -0.1352 * np.cos(1.3 * t), -0.0245 * np.sin(0.7 * t)])
    return FlatInput(k, kd, kdd, 0.4 * t, 0.4, 0.0)


def _fd4(f, t, h):
    return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)


def test_rotation_derivatives_match_finite_differences():
    R = lambda t: build_rotation_reference(_kappa(t))[0]  # noqa: E731
    Rdot = lambda t: build_rotation_reference(_kappa(t))[1]  # noqa: E731
    for t in (0.3, 1.7, 4.2):
        _, Rd, Rdd = build_rotation_reference(_kappa(t))
        for h in (1e-3, 5e-4):
            assert np.max(np.abs(_fd4(R, t, h) - Rd)) < 1e-9
            assert np.max(np.abs(_fd4(Rdot, t, h) - Rdd)) < 1e-9


def test_remap_identity_case():
    ref = remap_to_body_tangent(np.eye(3), np.eye(3), np.zeros((3, 3)), np.zeros((3, 3)), Z)
    assert np.array_equal(ref.omega_d, Z) and np.array_equal(ref.alpha_d, Z)


def test_constant_spin_rate_recovered():
    w0 = 1.7
    t = 0.9
    Rd = axis_angle_matrix([0, 0, 1], w0 * t)
    W = np.array([[0, -w0, 0], [w0, 0, 0], [0, 0, 0]])
    w_rd, a_rd = desired_body_rates(Rd, Rd @ W, Rd @ W @ W)
    assert np.allclose(w_rd, [0, 0, w0], atol=1e-15)
    assert np.allclose(a_rd, 0.0, atol=1e-14)


def test_remapped_rate_matches_quaternion_kinematics():
    h = 1e-4
    for t in (0.5, 2.5):
        R, Rd, Rdd = build_rotation_reference(_kappa(t))
        ref = remap_to_body_tangent(R, R, Rd, Rdd, Z)
        qp = remap_to_body_tangent(R, *build_rotation_reference(_kappa(t + h)), Z).q_d
        qm = remap_to_body_tangent(R, *build_rotation_reference(_kappa(t - h)), Z).q_d
        qdot = (qp - qm) / (2 * h)
        assert np.max(np.abs(qdot - quat_derivative(ref.q_d, ref.omega_d))) < 1e-7


def test_remap_rejects_inconsistent_derivative():
    with pytest.raises(NotSkewSymmetric):
        remap_to_body_tangent(np.eye(3), np.eye(3), np.eye(3), np.zeros((3, 3)), Z)


def test_remap_expresses_rate_in_current_frame():
    R, Rd, Rdd = build_rotation_reference(_kappa(1.0))
    Rb = to_rotation_matrix(np.array([0.9, 0.1, -0.3, 0.2]) / np.linalg.norm([0.9, 0.1, -0.3, 0.2]))
    w_rd, _ = desired_body_rates(R, Rd, Rdd)
    ref = remap_to_body_tangent(Rb, R, Rd, Rdd, Z)
    assert np.allclose(ref.omega_d, Rb.T @ R @ w_rd, atol=1e-14)


def test_continuous_sign():
    q = np.array([0.5, 0.5, 0.5, 0.5])
    assert np.array_equal(continuous_sign(q, -q), -q)
    assert np.array_equal(continuous_sign(q, q), q)
    assert np.array_equal(continuous_sign(q, None), q)


@pytest.mark.parametrize("name", invariant_names("refgen"))
def test_invariant(run_check, name):
    passed, measured, limit = run_check(name)
    assert passed, f"{measured} (limit {limit})"
