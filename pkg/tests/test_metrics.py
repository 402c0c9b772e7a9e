import numpy as np
import pytest

from conftest import invariant_names
from quadsmc.math3d import axis_angle_quaternion
from quadsmc.metrics import EmptySeries, compute_metrics_from_arrays, rms, signed_vector_part


def test_rms_examples():
    assert rms([-2.5] * 7) == 2.5
    assert abs(rms([3.0, 4.0]) - 3.5355) < 1e-4
    assert rms(np.zeros(5)) == 0.0
    with pytest.raises(EmptySeries):
        rms([])


def _traces(n, q_e, npwm=0.5):
    q = np.tile([1.0, 0, 0, 0], (n, 1))
    return dict(q_e=np.tile(q_e, (n, 1)), xi_e=np.zeros((n, 3)), q=q, psi_d=np.zeros(n),
                npwm=np.full((n, 4), npwm))


def test_perfect_tracking_gives_zero_errors():
    m = compute_metrics_from_arrays(**_traces(100, [1.0, 0, 0, 0]))
    assert m.q_e_rms == 0.0 and m.xi_e_rms == 0.0 and m.psi_e_rms == 0.0


def test_hover_npwm_rms():
    m = compute_metrics_from_arrays(**_traces(100, [1.0, 0, 0, 0]))
    assert abs(m.npwm_rms - 2.0) < 1e-12


def test_constant_ten_degree_error():
    q_e = axis_angle_quaternion([1, 0, 0], np.deg2rad(10.0))
    m = compute_metrics_from_arrays(**_traces(50, q_e))
    assert abs(m.q_e_rms - np.sin(np.deg2rad(5.0))) < 1e-12
    assert abs(m.q_e_rms - 0.0872) < 1e-4
    flipped = compute_metrics_from_arrays(**_traces(50, -q_e))
    assert flipped.q_e_rms == m.q_e_rms


def test_signed_vector_part():
    assert np.array_equal(signed_vector_part(np.array([[-0.6, 0.8, 0, 0]])), [[-0.8, 0, 0]])


def test_empty_traces_rejected():
    with pytest.raises(EmptySeries):
        compute_metrics_from_arrays(np.zeros((0, 4)), np.zeros((0, 3)), np.zeros((0, 4)), np.zeros(0),
                                    np.zeros((0, 4)))


@pytest.mark.parametrize("name", invariant_names("metrics"))
def test_invariant(run_check, name):
    passed, measured, limit = run_check(name)
    assert passed, f"{measured} (limit {limit})"
