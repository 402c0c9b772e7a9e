import io

import numpy as np
import pytest

from conftest import invariant_names
from quadsmc import scenarios as scn
from quadsmc import sim
from quadsmc.math3d import axis_angle_quaternion, quat_derivative


def test_rk4_exponential():
    x1 = sim.rk4_step(np.array([1.0]), lambda x: -x, 0.1)
    assert abs(x1[0] - np.exp(-0.1)) < 1e-6
    assert abs(x1[0] - 0.9048375) < 1e-7


def test_rk4_zero_derivative():
    x = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(sim.rk4_step(x, lambda s: np.zeros_like(s), 5e-4), x)


def test_rk4_constant_rate_quaternion():
    w = np.array([0.4, -1.1, 2.3])
    dt = 5e-4
    q = np.array([1.0, 0, 0, 0])
    worst = 0.0
    for k in range(1, 201):
        q = sim.rk4_step(q, lambda s: quat_derivative(s, w), dt, quaternion_slice=slice(0, 4))
        exact = axis_angle_quaternion(w, np.linalg.norm(w) * k * dt)
        worst = max(worst, np.max(np.abs(q - exact)))
    assert worst < 1e-8 * 200


def test_rk4_nonfinite_and_bad_step():
    with pytest.raises(sim.NonFinite):
        sim.rk4_step(np.array([1.0]), lambda x: np.array([np.inf]), 0.1)
    with pytest.raises(ValueError):
        sim.rk4_step(np.array([1.0]), lambda x: x, 0.0)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        sim.SimConfig(attitude_rate=300.0)
    with pytest.raises(ValueError):
        sim.SimConfig(duration=-1.0)
    cfg = sim.SimConfig()
    assert cfg.physics_per_attitude == 4 and cfg.attitude_per_position == 2


def test_legacy_adaptation_step():
    assert sim.legacy_adaptation_step(2.0, 0.0, 1.0, 0.002) == 2.0
    assert np.isclose(sim.legacy_adaptation_step(2.0, 1.0, 1.0, 0.002), 2.002)
    k = 0.0
    for _ in range(50_000):
        k = sim.legacy_adaptation_step(k, 0.01, 1.0, 0.002)
    assert k >= 1.0 * 0.01 * 100 - 1e-9


def test_hover_regulates():
    sc = scn.hover_scenario()
    res = sim.run_trial(sc, scn.build_controller("qsmc", sc))
    assert res.success
    late = res.t >= 2.0
    assert np.max(np.linalg.norm(res.xi_error[late], axis=1)) < 1e-3


def test_gimbal2_esmc_fails():
    sc = scn.gimbal_scenario(0.5)
    res = sim.run_trial(sc, scn.build_controller("esmc", sc))
    assert res.verdict == "unstable"


def test_trial_csv_schema():
    sc = scn.hover_scenario(duration=0.1)
    res = sim.run_trial(sc, scn.build_controller("qsmc", sc))
    buf = io.StringIO()
    sim.write_trial_csv(res, buf)
    lines = buf.getvalue().splitlines()
    header = lines[0].split(",")
    assert header == list(sim.CSV_COLUMNS)
    assert len(header) == 1 + 13 + 13 + 4 + 3 + 3 + 1 + 3 + 4 + 3 + 3 + 3 + 1
    assert len(lines) == res.t.size + 1


@pytest.mark.parametrize("name", invariant_names("sim"))
def test_invariant(run_check, name):
    passed, measured, limit = run_check(name)
    assert passed, f"{measured} (limit {limit})"
