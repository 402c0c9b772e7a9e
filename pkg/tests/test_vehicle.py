import numpy as np
import pytest

from quadsmc.math3d import UnitQuaternion
from quadsmc.vehicle import (GRAVITY, Disturbance, Environment, SingularAllocation, VehicleParams, VehicleState,
                             WrenchCommand, allocate, build_allocation_matrix, rk4_plant, state_derivative,
                             wind_disturbance)

P = VehicleParams()
NO_DIST = Disturbance()


def test_hover_is_an_equilibrium():
    s = VehicleState(xi=np.array([0.0, 0.0, 1.0]))
    d = state_derivative(s, WrenchCommand(P.m * GRAVITY), NO_DIST, P)
    assert np.allclose(d, 0.0, atol=1e-15)


def test_free_fall():
    d = state_derivative(VehicleState(), WrenchCommand(0.0), NO_DIST, P)
    assert np.allclose(d[3:6], [0.0, 0.0, -GRAVITY])


def test_gyroscopic_term_matches_componentwise_oracle():
    J = np.array([1.66e-5, 1.66e-5, 2.93e-5])
    w1, w2, w3 = 1.0, 2.0, 3.0
    s = VehicleState(omega=np.array([w1, w2, w3]))
    d = state_derivative(s, WrenchCommand(0.0), NO_DIST, VehicleParams(J=J))
    oracle = np.array([(J[1] - J[2]) * w2 * w3 / J[0], (J[2] - J[0]) * w3 * w1 / J[1],
                       (J[0] - J[1]) * w1 * w2 / J[2]])
    assert np.allclose(d[10:13], oracle, rtol=1e-12, atol=1e-12)


def test_translational_acceleration_uses_thrust_axis():
    q = UnitQuaternion.from_axis_angle([1.0, 0.0, 0.0], 0.3)
    d = state_derivative(VehicleState(q=q), WrenchCommand(0.5), Disturbance(d_a=np.array([0.1, 0, 0])), P)
    expected = -GRAVITY * np.array([0, 0, 1.0]) + 0.5 / P.m * q.rotate([0, 0, 1.0]) + [0.1, 0, 0]
    assert np.allclose(d[3:6], expected, rtol=1e-14)


def test_params_validation():
    with pytest.raises(ValueError):
        VehicleParams(m=-1.0)
    with pytest.raises(ValueError):
        VehicleParams(J=np.array([1e-5, 0.0, 1e-5]))


def test_disturbance_bound_enforced():
    with pytest.raises(ValueError):
        Disturbance(d_a=np.array([1.0, 0, 0]), d_a_bar=np.array([0.5, 0.5, 0.5]))


def test_allocation_matrix_structure():
    G = build_allocation_matrix(P)
    assert np.array_equal(G[0], np.ones(4))
    assert np.allclose(np.abs(G[1:3]), P.l * np.sin(np.pi / 4))
    assert abs(P.l * np.sin(np.pi / 4) - 0.06505) < 1e-4
    F = 0.3
    assert np.allclose(G @ np.full(4, F / 4), [F, 0, 0, 0], atol=1e-15)
    w = np.array([0.3, 1e-3, -2e-3, 5e-4])
    assert np.allclose(G @ np.linalg.solve(G, w), w, atol=1e-12)


def test_singular_allocation_rejected():
    with pytest.raises(SingularAllocation):
        build_allocation_matrix(VehicleParams(beta=1e-14))


def test_hover_allocation_symmetric():
    cmd = allocate(WrenchCommand(P.m_hat * GRAVITY), P)
    assert np.allclose(cmd.u, P.m_hat * GRAVITY / 4, rtol=1e-14)
    assert np.max(cmd.npwm) - np.min(cmd.npwm) <= 1e-12
    assert abs(cmd.npwm[0] - 0.5) < 1e-12
    assert not cmd.saturated


def test_yaw_torque_matches_linear_solve():
    G = build_allocation_matrix(P)
    w = WrenchCommand(P.m_hat * GRAVITY, np.array([0.0, 0.0, 1e-4]))
    cmd = allocate(w, P)
    oracle = np.linalg.solve(G, np.concatenate([[w.f], w.tau]))
    assert np.allclose(cmd.u, oracle, rtol=1e-12)
    # motors with a positive row-4 entry speed up
    assert np.all((cmd.u > P.m_hat * GRAVITY / 4) == (G[3] > 0))


def test_negative_demand_clamped_and_flagged():
    cmd = allocate(WrenchCommand(0.01, np.array([0.01, 0.0, 0.0])), P)
    assert cmd.saturated
    assert np.all(cmd.u >= 0.0) and np.min(cmd.u) == 0.0
    assert np.all((cmd.npwm >= 0) & (cmd.npwm <= 1))


def test_wind_disturbance_examples():
    assert np.array_equal(wind_disturbance(0.0, np.zeros(3), 0.4), np.zeros(3))
    assert np.allclose(wind_disturbance(5.6, np.zeros(3), 0.4), [2.24, 0, 0])
    assert np.allclose(wind_disturbance(5.6, np.array([5.6, 0, 0]), 0.4), 0.0)


def test_wind_gate_in_plant():
    env = Environment(wind=np.array([3.8, 0, 0]), gate_lo=np.array([0.0, -np.inf, -np.inf]))
    inside = state_derivative(VehicleState(xi=np.array([0.5, 0, 1])), WrenchCommand(P.m * GRAVITY), NO_DIST, P, env)
    outside = state_derivative(VehicleState(xi=np.array([-0.5, 0, 1])), WrenchCommand(P.m * GRAVITY), NO_DIST, P,
                               env)
    assert np.allclose(inside[3:6], [0.4 * 3.8, 0, 0])
    assert np.allclose(outside[3:6], 0.0, atol=1e-15)


def test_rk4_energy_and_momentum_conserved():
    x = np.zeros(13)
    x[2], x[3:6], x[6], x[10:13] = 1.0, (1.0, -0.5, 2.0), 1.0, (3.0, -2.0, 5.0)
    J = np.array([1.4e-5, 1.8e-5, 2.9e-5])
    env = Environment(c_d=np.zeros(3)).pack()
    x1 = rk4_plant(x.copy(), 0.0, np.zeros(3), P.m, J, np.zeros(3), np.zeros(3), env, 5e-4, 2000)

    def energy(s):
        return 0.5 * np.dot(s[3:6], s[3:6]) + GRAVITY * s[2]
    assert abs(energy(x1) - energy(x)) / abs(energy(x)) < 1e-6
    assert abs(np.linalg.norm(J * x1[10:13]) / np.linalg.norm(J * x[10:13]) - 1) < 1e-6
    assert abs(np.linalg.norm(x1[6:10]) - 1) < 1e-12


def test_npwm_monotone_in_u():
    G = build_allocation_matrix(P)
    vals = []
    for u0 in np.linspace(0.0, P.u_max, 200):
        u = np.array([u0, 0.5 * P.u_max, 0.5 * P.u_max, 0.5 * P.u_max])
        w = G @ u
        vals.append(allocate(WrenchCommand(w[0], w[1:]), P).npwm[0])
    assert np.all(np.diff(vals) > 0)
