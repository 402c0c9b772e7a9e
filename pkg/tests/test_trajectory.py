import numpy as np
import pytest

from conftest import invariant_names
from quadsmc.math3d import rotate
from quadsmc.trajectory import (Hover, Lemniscate, PolynomialTrajectory, check_smoothness, gimbal_sinusoid,
                                load_trajectory_csv, throw_launch_initial)


def test_gimbal_sinusoid_examples():
    ref = gimbal_sinusoid(0.2, np.array([10.0]))
    assert np.allclose(ref.eta_d[0], [0.0, 0.2, 0.0])
    zero = gimbal_sinusoid(0.0, np.linspace(0, 30, 50))
    assert not np.any(zero.eta_d) and not np.any(zero.eta_dot_d) and not np.any(zero.eta_ddot_d)
    hold = gimbal_sinusoid(0.5, np.array([3.0]))
    assert not np.any(hold.eta_d)


def test_gimbal_sinusoid_derivatives():
    t = np.array([12.3, 17.9, 25.1])
    errs = []
    for h in (1e-2, 5e-3):
        p, m = gimbal_sinusoid(0.5, t + h), gimbal_sinusoid(0.5, t - h)
        c = gimbal_sinusoid(0.5, t)
        errs.append(max(np.max(np.abs((p.eta_d - m.eta_d) / (2 * h) - c.eta_dot_d)),
                        np.max(np.abs((p.eta_dot_d - m.eta_dot_d) / (2 * h) - c.eta_ddot_d))))
    assert np.log2(errs[0] / errs[1]) > 1.9


def test_lemniscate_rest_to_rest():
    traj = Lemniscate()
    rows = traj.sample(np.array([0.0, traj.duration]))
    assert np.allclose(rows[:, 3:9], 0.0, atol=1e-12)


def test_lemniscate_peak_acceleration():
    traj = Lemniscate()
    rows = traj.sample(np.linspace(0.0, traj.duration, 200001))
    peak = np.max(np.linalg.norm(rows[:, 6:9], axis=1))
    assert abs(peak - 5.84) <= 0.05


@pytest.mark.parametrize("t", [5.0, 12.7, 21.3, 33.0])
def test_lemniscate_derivative_orders(t):
    traj = Lemniscate()
    for k in range(4):
        errs = []
        for h in (2e-3, 1e-3):
            rp, rm, rc = traj.sample(np.array([t + h, t - h, t]))
            errs.append(np.max(np.abs((rp[3 * k:3 * k + 3] - rm[3 * k:3 * k + 3]) / (2 * h)
                                      - rc[3 * k + 3:3 * k + 6])))
        if errs[1] > 1e-10:
            assert np.log2(errs[0] / errs[1]) >= 1.9


def test_hover_is_static():
    rows = Hover().sample(np.linspace(0, 5, 11))
    assert np.all(rows[:, 3:15] == 0.0)


def test_throw_initial_conditions():
    a, b = throw_launch_initial(7), throw_launch_initial(7)
    assert np.array_equal(a.as_array(), b.as_array())
    for seed in range(50):
        s = throw_launch_initial(seed)
        assert rotate(s.q.as_array(), [0, 0, 1.0])[2] < 0
        assert abs(np.linalg.norm(s.nu) - 2.5) < 1e-12


def test_polynomial_trajectory_and_file_loading(tmp_path):
    times = np.array([0.0, 2.0])
    coeffs = np.zeros((1, 3, 6))
    coeffs[0, 0, 3:] = [0.1, -0.02, 0.001]
    traj = PolynomialTrajectory(times, coeffs)
    t = np.linspace(0, 2, 401)
    rows = traj.sample(t)
    assert check_smoothness(t, rows) < 0.05
    path = tmp_path / "traj.csv"
    np.savetxt(path, np.column_stack([t, rows]), delimiter=",", header=",".join(["t"] + [f"c{i}" for i in range(18)]),
               comments="")
    loaded = load_trajectory_csv(path)
    assert np.allclose(loaded.sample(t), rows)


def test_piecewise_linear_file_rejected(tmp_path):
    t = np.linspace(0, 1, 11)
    rows = np.zeros((11, 18))
    rows[:, 0] = np.abs(t - 0.5)
    rows[:, 3] = 5.0  # derivative column inconsistent with the position column
    path = tmp_path / "bad.csv"
    np.savetxt(path, np.column_stack([t, rows]), delimiter=",", header=",".join(["t"] + [f"c{i}" for i in range(18)]),
               comments="")
    with pytest.raises(ValueError):
        load_trajectory_csv(path)


@pytest.mark.parametrize("name", invariant_names("trajectory"))
def test_invariant(run_check, name):
    passed, measured, limit = run_check(name)
    assert passed, f"{measured} (limit {limit})"
