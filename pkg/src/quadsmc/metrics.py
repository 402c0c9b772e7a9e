"""Scalar tracking and effort metrics of a trial."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .math3d import yaw_from_quaternion, wrap_angle


class EmptySeries(ValueError):
    pass


def rms(series):
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise EmptySeries("RMS of an empty series")
    return float(np.sqrt(np.mean(x * x)))


@dataclass
class TrialMetrics:
    q_e_rms: float
    xi_e_rms: float          # m
    psi_e_rms: float         # deg
    npwm_rms: float          # sum over motors of per-motor RMS
    q_e_rms_components: tuple = (0.0, 0.0, 0.0)

    def as_dict(self):
        d = asdict(self)
        d["q_e_rms_components"] = list(self.q_e_rms_components)
        return d


def signed_vector_part(q_e):
    """``sgn₊(q_we) q⃗_e`` row-wise."""
    q_e = np.asarray(q_e, float)
    sign = np.where(q_e[..., 0] >= 0.0, 1.0, -1.0)
    return sign[..., None] * q_e[..., 1:]


def compute_metrics_from_arrays(q_e, xi_e, q, psi_d, npwm):
    q_e = np.asarray(q_e, float)
    if q_e.shape[0] == 0:
        raise EmptySeries("no samples")
    vec = signed_vector_part(q_e)
    psi_e = np.rad2deg(wrap_angle(yaw_from_quaternion(np.asarray(q, float)) - np.asarray(psi_d, float)))
    npwm = np.asarray(npwm, float)
    return TrialMetrics(
        q_e_rms=rms(np.linalg.norm(vec, axis=1)),
        xi_e_rms=rms(np.linalg.norm(np.asarray(xi_e, float), axis=1)),
        psi_e_rms=rms(psi_e),
        npwm_rms=float(sum(rms(npwm[:, i]) for i in range(npwm.shape[1]))),
        q_e_rms_components=tuple(rms(vec[:, i]) for i in range(3)),
    )


def compute_metrics(result, t_start=None):
    """Metrics of a ``TrialResult``; ``t_start`` drops the samples before it."""
    sel = slice(None) if t_start is None else result.t >= t_start
    return compute_metrics_from_arrays(result.q_e[sel], result.xi_error[sel], result.state[sel, 6:10],
                                       result.psi_d[sel], result.npwm[sel])
