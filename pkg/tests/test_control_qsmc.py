import numpy as np
import pytest

from conftest import invariant_names
from quadsmc import control_qsmc as cq
from quadsmc.math3d import axis_angle_quaternion, from_rotation_matrix, to_rotation_matrix
from quadsmc.vehicle import GRAVITY, VehicleParams

P = VehicleParams()
Z = np.zeros(3)


def gains(Lam=8.0, K=400.0, phi=3.33):
    return cq.AttitudeGains(np.full(3, Lam), np.full(3, K), np.full(3, phi))


def random_unit(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def test_attitude_error_trivial_cases():
    rng = np.random.default_rng(0)
    q = random_unit(rng, 1)[0]
    assert np.allclose(cq.attitude_error(q, q), [1, 0, 0, 0], atol=1e-15)
    assert np.allclose(cq.attitude_error([1.0, 0, 0, 0], q), q, atol=1e-15)


def test_attitude_error_matches_matrix_oracle():
    rng = np.random.default_rng(1)
    for q_d, q in zip(random_unit(rng, 200), random_unit(rng, 200)):
        q_e = cq.attitude_error(q_d, q)
        oracle = from_rotation_matrix(to_rotation_matrix(q_d).T @ to_rotation_matrix(q))
        assert min(np.max(np.abs(q_e - oracle)), np.max(np.abs(q_e + oracle))) < 1e-9


def test_sliding_surface_examples():
    g = gains()
    zero = cq.ErrorState(Z, Z, np.array([1.0, 0, 0, 0]), Z)
    assert np.array_equal(cq.sliding_surface_attitude(zero, g), Z)
    q_e = np.array([-0.999, -0.04, 0.0, 0.0])
    q_e /= np.linalg.norm(q_e)
    w = np.array([0.1, 0.0, 0.0])
    s1 = cq.sliding_surface_attitude(cq.ErrorState(Z, Z, q_e, w), g)
    s2 = cq.sliding_surface_attitude(cq.ErrorState(Z, Z, -q_e, w), g)
    assert np.array_equal(s1, s2)
    # positive-hemisphere representative evaluated by hand
    assert np.allclose(s1, w + 8.0 * (-q_e[1:]))


def test_attitude_control_zero_errors_gives_zero_torque():
    e = cq.ErrorState(Z, Z, np.array([1.0, 0, 0, 0]), Z)
    assert np.array_equal(cq.attitude_control(e, Z, Z, Z, gains(), P), Z)


def test_attitude_control_switching_saturates():
    g = gains()
    e = cq.ErrorState(Z, Z, np.array([1.0, 0, 0, 0]), np.array([1e6, 0, 0]))
    tau = cq.attitude_control(e, Z, Z, Z, g, P)
    assert np.isclose(tau[0], -P.J_hat[0] * g.K_q[0], rtol=1e-12)


def test_attitude_control_antipodal_bitwise_identical():
    rng = np.random.default_rng(2)
    g = gains()
    for q_e in random_unit(rng, 500):
        w = rng.normal(size=3)
        om = rng.normal(size=3)
        qd1 = cq.error_quaternion_rate(q_e, w)[1:]
        qd2 = cq.error_quaternion_rate(-q_e, w)[1:]
        t1 = cq.attitude_control(cq.ErrorState(Z, Z, q_e, w), qd1, om, Z, g, P)
        t2 = cq.attitude_control(cq.ErrorState(Z, Z, -q_e, w), qd2, om, Z, g, P)
        assert np.array_equal(t1, t2)


def position_gains():
    return cq.PositionGains(np.array([3.0, 3.0, 2.0]), np.array([4.0, 4.0, 3.5]), np.full(3, 1.25))


def test_position_control_hover_and_saturation():
    pg = position_gains()
    e = cq.ErrorState(Z, Z, np.array([1.0, 0, 0, 0]), Z)
    assert np.allclose(cq.position_control(e, Z, pg, P), [0, 0, P.m_hat * GRAVITY])
    big = cq.ErrorState(np.full(3, -1e6), Z, np.array([1.0, 0, 0, 0]), Z)
    kappa = cq.position_control(big, Z, pg, P)
    assert np.allclose(kappa - [0, 0, P.m_hat * GRAVITY], P.m_hat * pg.K_xi, rtol=1e-12)


def test_thrust_floor_enforced():
    pg = position_gains()
    floor = cq.kappa_floor_default(P)
    # a demand that cancels gravity exactly hits the zero-norm branch
    e = cq.ErrorState(Z, Z, np.array([1.0, 0, 0, 0]), Z)
    kappa = cq.position_control(e, np.array([0, 0, -GRAVITY]), pg, P)
    assert np.allclose(kappa, [0, 0, floor])
    assert np.allclose(cq.enforce_thrust_floor(np.array([1e-4, 0, 0]), floor), [floor, 0, 0])


def test_thrust_from_kappa():
    F = 0.3
    assert np.isclose(cq.thrust_from_kappa([0, 0, F], [1.0, 0, 0, 0]), F)
    q90 = axis_angle_quaternion([1, 0, 0], np.pi / 2)
    assert abs(cq.thrust_from_kappa([0, 0, F], q90)) < 1e-15
    rng = np.random.default_rng(3)
    for q in random_unit(rng, 100):
        k = rng.normal(size=3)
        expected = max(np.dot(k, to_rotation_matrix(q)[:, 2]), 0.0)
        assert np.isclose(cq.thrust_from_kappa(k, q), expected, atol=1e-14)


def adapt_params(K_th=1.0):
    return cq.AdaptParams(np.ones(3), np.full(3, 0.8), np.full(3, 0.02), np.full(3, K_th))


def test_adapt_step_branches():
    pq, px = adapt_params(), adapt_params()
    phi = np.ones(3)
    state = cq.AdaptiveState(np.full(3, 2.0), np.full(3, 2.0))
    out = cq.adapt_step(state, Z, Z, pq, px, P, 2e-3, phi, phi)
    assert np.array_equal(out.dK_q, Z) and np.array_equal(out.dK_xi, Z)
    # |s| < εφ shrinks the gain
    out = cq.adapt_step(state, np.full(3, 0.5), np.full(3, 0.5), pq, px, P, 2e-3, phi, phi)
    assert np.all(out.dK_q < 0) and np.all(out.dK_xi < 0)
    # at the threshold the gain grows at μ exactly
    at_floor = cq.AdaptiveState(np.ones(3), np.ones(3))
    out = cq.adapt_step(at_floor, np.full(3, 5.0), np.full(3, 5.0), pq, px, P, 2e-3, phi, phi)
    assert np.array_equal(out.dK_q, np.full(3, 0.02))
    assert np.array_equal(out.ddK_xi, Z)
    with pytest.raises(ValueError):
        cq.adapt_step(state, Z, Z, pq, px, P, 0.0, phi, phi)


def test_gain_condition_examples():
    zero = cq.UncertaintyBounds()
    assert np.allclose(cq.gain_condition(zero, np.ones(3), J_hat=np.ones(3)), 1.0)
    b = cq.UncertaintyBounds(delta_q_bar=np.array([0, 0, 0.0005]), d_alpha_bar=np.array([0, 0, 0.0002]))
    K = cq.gain_condition(b, np.array([1e-4, 1e-4, 3e-4]), J_hat=np.array([1.66e-5, 1.66e-5, 2.93e-5]))
    assert abs(K[2] - 34.13) < 0.05
    bx = cq.UncertaintyBounds(delta_xi_bar=np.full(3, 1.0), d_a_bar=np.full(3, 2.0))
    assert np.allclose(cq.gain_condition(bx, np.ones(3), rho=1.0), 4.0)


def test_legacy_gain_step():
    assert cq.legacy_gain_step(3.0, 0.0, 1.0, 0.002) == 3.0
    assert np.isclose(cq.legacy_gain_step(3.0, 1.0, 1.0, 0.002), 3.002)


def test_gain_positivity_enforced():
    with pytest.raises(ValueError):
        cq.AttitudeGains(np.ones(3), np.array([1.0, 0.0, 1.0]), np.ones(3))
    with pytest.raises(ValueError):
        cq.AdaptParams(np.ones(3), np.ones(3), -np.ones(3), np.ones(3))


def test_regulation_enters_boundary_layer():
    from quadsmc import scenarios as scn
    from quadsmc import sim
    sc = scn.attitude_regulation_scenario(axis_angle_quaternion([1, 0, 0], np.deg2rad(30.0)))
    res = sim.run_trial(sc, scn.build_controller("qsmc", sc))
    assert res.success
    assert np.all(np.abs(res.s_q[-1]) < 0.05)
    assert np.linalg.norm(res.q_e[-1, 1:]) < 1e-3


@pytest.mark.parametrize("name", invariant_names("control_qsmc"))
def test_invariant(run_check, name):
    passed, measured, limit = run_check(name)
    assert passed, f"{measured} (limit {limit})"
