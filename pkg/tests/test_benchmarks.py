import numpy as np
import pytest

from conftest import invariant_names
from quadsmc import benchmarks as bm
from quadsmc import scenarios as scn
from quadsmc import sim
from quadsmc.math3d import axis_angle_quaternion
from quadsmc.vehicle import GRAVITY, VehicleParams

P = VehicleParams()
Z = np.zeros(3)


def test_euler_kinematics_examples():
    w = np.array([0.3, -0.2, 0.5])
    assert np.allclose(bm.euler_rate_matrix(Z), np.eye(3))
    assert np.allclose(bm.euler_kinematics(Z, w), w)
    R = 0.7
    eta_dot = bm.euler_kinematics(np.array([np.pi / 2, 0.0, 0.0]), np.array([0.0, 0.0, R]))
    assert np.isclose(eta_dot[1], -R)
    with pytest.raises(bm.GimbalLock):
        bm.euler_kinematics(np.array([0.0, np.pi / 2 - 1e-4, 0.0]), w)


def test_euler_from_quaternion_round_trip():
    q = axis_angle_quaternion([0, 0, 1], 0.4)
    assert np.allclose(bm.euler_from_quaternion(q), [0, 0, 0.4])
    with pytest.raises(bm.GimbalLock):
        bm.euler_from_quaternion(axis_angle_quaternion([0, 1, 0], np.pi / 2))


def test_esmc_inertia_ratio():
    a = bm.inertia_ratios(np.array([1.66e-5, 1.66e-5, 2.93e-5]))
    assert abs(a[0] - (-0.765)) < 1e-3


def test_esmc_hover_zero_errors():
    g = bm.gimbal1_esmc_gains()
    tau, s, eta_e = bm.esmc_attitude_torque(Z, Z, Z, Z, Z, g, P.J_hat)
    assert np.array_equal(tau, Z)
    f, phi_d, theta_d, _ = bm.esmc_position(Z, Z, Z, Z, 0.0, bm.lemniscate_esmc_gains(), P.m_hat)
    assert np.isclose(f, P.m_hat * GRAVITY, rtol=1e-12) and phi_d == 0.0 and theta_d == 0.0


def test_esmc_arcsin_domain():
    with pytest.raises(bm.ArcsinDomain):
        bm.esmc_position(Z, Z, Z, np.array([50.0, 0.0, 0.0]), 0.0, bm.lemniscate_esmc_gains(), P.m_hat)


def test_gtc_zero_error():
    R = np.eye(3)
    tau = bm.gtc_control(R, Z, R, Z, Z, bm.lemniscate_gtc_gains(), P)
    assert np.array_equal(tau, Z)
    assert np.array_equal(bm.geometric_attitude_error(R, R), Z)
    kappa = bm.gtc_kappa(Z, Z, Z, bm.lemniscate_gtc_gains(), P.m_hat)
    assert np.allclose(kappa, [0, 0, P.m_hat * GRAVITY])


def test_qpd_examples():
    g = bm.lemniscate_qpd_gains()
    assert np.array_equal(bm.qpd_control(np.array([1.0, 0, 0, 0]), Z, g, P), Z)
    q_e = axis_angle_quaternion([0, 1, 0], np.deg2rad(20.0))
    w = np.array([0.1, -0.2, 0.3])
    tau = bm.qpd_control(q_e, w, g, P)
    assert np.array_equal(tau, bm.qpd_control(-q_e, w, g, P))
    tau0 = bm.qpd_control(q_e, Z, g, P)
    assert np.isclose(tau0[1], -P.J_hat[1] * g.K_P[1] * np.sin(np.deg2rad(10.0)), rtol=1e-12)
    assert tau0[0] == 0.0 and tau0[2] == 0.0


def test_gtc_small_angle_regulation():
    sc = scn.attitude_regulation_scenario(axis_angle_quaternion([1, 0, 0], np.deg2rad(10.0)))
    res = sim.run_trial(sc, scn.build_controller("gtc", sc, gains=scn.default_gains("gtc", "lemniscate")))
    roll = 2 * np.arctan2(res.q_e[:, 1] * np.sign(res.q_e[:, 0]), np.abs(res.q_e[:, 0]))
    assert res.success
    assert np.max(-roll) <= 0.2 * np.deg2rad(10.0)   # overshoot below 20%
    assert abs(roll[-1]) < 1e-3


@pytest.mark.parametrize("name", invariant_names("benchmarks"))
def test_invariant(run_check, name):
    passed, measured, limit = run_check(name)
    assert passed, f"{measured} (limit {limit})"
