"""Benchmark controllers: Euler-angle SMC (ESMC), geometric tracking control
(GTC) and a quaternion PD attitude loop with the sliding-mode position loop
(QPD). All share the plant, reference generation and metrics code."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .control_qsmc import (ControllerBase, ControllerFailure, PositionGains, _vec3, kappa_floor_default,
                           nb_position_law, nb_qsmc_kappa_derivatives, nb_quaternion_errors)
from .math3d import nb_cross, nb_dot, nb_qconj, nb_qmat, nb_qmul, nb_sgn_plus, nb_vee, wrap_angle
from .refgen import nb_remap
from .trajectory import gimbal_sinusoid
from .vehicle import GRAVITY

THETA_GUARD = np.pi / 2 - 1e-3


class GimbalLock(ControllerFailure):
    def __init__(self, theta):
        super().__init__("gimbal_lock", f"pitch {theta:.4f} rad within the gimbal-lock guard")


class ArcsinDomain(ControllerFailure):
    def __init__(self, which, value):
        super().__init__("arcsin_domain", f"{which} argument {value:.4f} outside [-1, 1]")


@dataclass
class EulerState:
    eta: np.ndarray
    eta_dot: np.ndarray

    def __post_init__(self):
        self.eta = wrap_angle(np.asarray(self.eta, float))
        self.eta_dot = np.asarray(self.eta_dot, float)
        if abs(self.eta[1]) >= THETA_GUARD:
            raise GimbalLock(self.eta[1])


def euler_from_quaternion(q):
    """Roll, pitch, yaw of the yaw-pitch-roll sequence ``R = R_z(ψ)R_y(θ)R_x(φ)``."""
    q = q.as_array() if hasattr(q, "as_array") else np.asarray(q, float)
    w, x, y, z = q
    sin_theta = 2.0 * (w * y - z * x)
    theta = np.arcsin(np.clip(sin_theta, -1.0, 1.0))
    if abs(theta) >= THETA_GUARD:
        raise GimbalLock(theta)
    phi = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    psi = np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return wrap_angle(np.array([phi, theta, psi]))


def euler_rate_matrix(eta):
    phi, theta = eta[0], eta[1]
    if abs(theta) >= THETA_GUARD:
        raise GimbalLock(theta)
    sf, cf = np.sin(phi), np.cos(phi)
    tt, ct = np.tan(theta), np.cos(theta)
    return np.array([[1.0, sf * tt, cf * tt], [0.0, cf, -sf], [0.0, sf / ct, cf / ct]])


def euler_kinematics(eta, omega):
    """``η̇ = H(η) ω``."""
    return euler_rate_matrix(np.asarray(eta, float)) @ np.asarray(omega, float)


def inertia_ratios(J):
    J = _vec3(J)
    return np.array([(J[1] - J[2]) / J[0], (J[2] - J[0]) / J[1], (J[0] - J[1]) / J[2]])


# ---------------------------------------------------------------------------
# gains
# ---------------------------------------------------------------------------

@dataclass
class ESMCGains:
    K_eta: np.ndarray
    Lambda_eta: np.ndarray
    phi_eta: np.ndarray
    K_xi: np.ndarray = None
    Lambda_xi: np.ndarray = None
    phi_xi: np.ndarray = None

    def __post_init__(self):
        for name in ("K_eta", "Lambda_eta", "phi_eta", "K_xi", "Lambda_xi", "phi_xi"):
            val = getattr(self, name)
            if val is None:
                continue
            val = _vec3(val)
            if np.any(val <= 0):
                raise ValueError(f"{name} must be positive")
            setattr(self, name, val)


@dataclass
class GTCGains:
    """``K_R``, ``K_omega`` are given per unit inertia (the torque gain is ``diag(K)·Ĵ``)."""

    K_R: np.ndarray
    K_omega: np.ndarray
    K_xi: np.ndarray = None
    K_nu: np.ndarray = None

    def __post_init__(self):
        for name in ("K_R", "K_omega", "K_xi", "K_nu"):
            val = getattr(self, name)
            if val is None:
                continue
            val = _vec3(val)
            if np.any(val <= 0):
                raise ValueError(f"{name} must be positive")
            setattr(self, name, val)


@dataclass
class QPDGains:
    K_P: np.ndarray
    K_D: np.ndarray
    position: PositionGains | None = None

    def __post_init__(self):
        for name in ("K_P", "K_D"):
            val = _vec3(getattr(self, name))
            if np.any(val <= 0):
                raise ValueError(f"{name} must be positive")
            setattr(self, name, val)


def gimbal1_esmc_gains():
    return ESMCGains(K_eta=np.full(3, 10.0), Lambda_eta=np.full(3, 7.0), phi_eta=np.array([4.0, 4.0, 2.0]))


def lemniscate_esmc_gains():
    return ESMCGains(K_eta=np.full(3, 8.0), Lambda_eta=np.full(3, 4.0), phi_eta=np.full(3, 2.0),
                     K_xi=np.array([5.0, 5.0, 8.0]), Lambda_xi=np.array([2.0, 2.0, 1.0]), phi_xi=np.full(3, 1.11))


def gimbal1_gtc_gains():
    return GTCGains(K_R=np.array([752.1, 834.7, 156.0]), K_omega=np.array([202.1, 209.9, 222.1]))


def gimbal2_gtc_gains():
    return GTCGains(K_R=np.array([794.0, 826.3, 150.0]), K_omega=np.array([215.8, 232.8, 237.3]))


def lemniscate_gtc_gains():
    return GTCGains(K_R=np.array([414.43, 345.56, 246.42]), K_omega=np.array([59.08, 69.54, 63.90]),
                    K_xi=np.array([7.70, 6.91, 7.37]), K_nu=np.array([2.34, 1.67, 4.18]))


def gimbal1_qpd_gains():
    return QPDGains(K_P=np.array([2251.2, 2166.9, 729.9]), K_D=np.array([232.3, 196.0, 127.1]))


def gimbal2_qpd_gains():
    return QPDGains(K_P=np.array([1926.1, 1644.3, 1003.9]), K_D=np.array([366.0, 392.1, 138.2]))


def lemniscate_qpd_gains():
    return QPDGains(K_P=np.array([1045.54, 881.97, 678.06]), K_D=np.array([97.97, 106.79, 118.29]),
                    position=PositionGains(Lambda_xi=np.array([2.27, 2.01, 1.32]),
                                           K_xi=np.array([4.54, 3.52, 3.48]),
                                           phi_xi=np.array([1.102, 1.277, 1.131])))


# ---------------------------------------------------------------------------
# pure control laws
# ---------------------------------------------------------------------------

def esmc_attitude_torque(eta, omega, eta_d, eta_dot_d, eta_ddot_d, gains: ESMCGains, J_hat):
    """Decoupled second-order Euler-angle law.

    Body rates stand in for the Euler-angle rates, as in the simplified
    model the law is derived from. Returns ``(τ, s_η, η_e)``.
    """
    J_hat = _vec3(J_hat)
    omega = np.asarray(omega, float)
    eta_e = wrap_angle(np.asarray(eta, float) - np.asarray(eta_d, float))
    s = omega - np.asarray(eta_dot_d, float) + gains.Lambda_eta * eta_e
    a = inertia_ratios(J_hat)
    coupling = a * np.array([omega[1] * omega[2], omega[0] * omega[2], omega[0] * omega[1]])
    tau = J_hat * (np.asarray(eta_ddot_d, float) - gains.Lambda_eta * eta_e
                   - gains.K_eta * np.tanh(s / gains.phi_eta) - coupling)
    return tau, s, eta_e


def esmc_position(eta, xi_e, nu_e, xi_dd_d, psi_d, gains: ESMCGains, m_hat):
    """Thrust and the roll/pitch set-points of the Euler-angle position loop."""
    s = np.asarray(nu_e, float) + gains.Lambda_xi * np.asarray(xi_e, float)
    acc = np.asarray(xi_dd_d, float) - gains.Lambda_xi * np.asarray(nu_e, float) - gains.K_xi * np.tanh(s / gains.phi_xi)
    tilt = np.cos(eta[0]) * np.cos(eta[1])
    f = m_hat / tilt * (acc[2] + GRAVITY)
    if f <= 0.0:
        raise ArcsinDomain("thrust", f)
    u_x, u_y = m_hat / f * acc[0], m_hat / f * acc[1]
    arg_phi = u_x * np.sin(psi_d) - u_y * np.cos(psi_d)
    if abs(arg_phi) > 1.0:
        raise ArcsinDomain("roll", arg_phi)
    phi_d = np.arcsin(arg_phi)
    arg_theta = (u_x * np.cos(psi_d) + u_y * np.sin(psi_d)) / np.cos(phi_d)
    if abs(arg_theta) > 1.0:
        raise ArcsinDomain("pitch", arg_theta)
    return f, phi_d, np.arcsin(arg_theta), s


def esmc_control(q, omega, eta_d, eta_dot_d, eta_ddot_d, gains, params):
    """ESMC torque at the given attitude; raises ``GimbalLock`` near ±90° pitch."""
    eta = euler_from_quaternion(q)
    return esmc_attitude_torque(eta, omega, eta_d, eta_dot_d, eta_ddot_d, gains, params.J_hat)


def geometric_attitude_error(R_d, R):
    """``e_R = ½ (R_dᵀR − RᵀR_d)ᵛ``."""
    M = 0.5 * (R_d.T @ R - R.T @ R_d)
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


@njit(cache=True)
def nb_gtc_torque(R, om, Rd, om_d, al_d, K_R, K_w, J_hat):
    M = 0.5 * (Rd.T @ R - R.T @ Rd)
    e_R = nb_vee(M)
    e_w = om - om_d
    tau = nb_cross(om, J_hat * om) + J_hat * al_d - J_hat * K_w * e_w - J_hat * K_R * e_R
    return tau, e_R


def gtc_control(R, omega, R_d, omega_d, alpha_d, gains: GTCGains, params):
    """GTC torque with ``ω_d``/``α_d`` already mapped to the body tangent space."""
    tau, _ = nb_gtc_torque(np.asarray(R, float), np.asarray(omega, float), np.asarray(R_d, float),
                           np.asarray(omega_d, float), np.asarray(alpha_d, float), gains.K_R, gains.K_omega,
                           params.J_hat)
    return tau


def gtc_kappa(xi_e, nu_e, xi_dd_d, gains: GTCGains, m_hat):
    return m_hat * (np.asarray(xi_dd_d, float) + GRAVITY * np.array([0.0, 0.0, 1.0])
                    - gains.K_xi * np.asarray(xi_e, float) - gains.K_nu * np.asarray(nu_e, float))


@njit(cache=True)
def nb_qpd_torque(q, om, q_d, om_d, K_P, K_D, J_hat):
    q_e, om_e, _ = nb_quaternion_errors(q, om, q_d, om_d)
    sg = nb_sgn_plus(q_e[0])
    tau = -J_hat * K_D * om_e - J_hat * K_P * sg * q_e[1:4]
    return tau, q_e


def qpd_control(q_e, omega_e, gains: QPDGains, params):
    """``τ = −K_D ω_e − K_P sgn₊(q_we) q⃗_e`` with gains scaled by ``Ĵ``."""
    q_e = q_e.as_array() if hasattr(q_e, "as_array") else np.asarray(q_e, float)
    sg = 1.0 if q_e[0] >= 0.0 else -1.0
    return -params.J_hat * gains.K_D * np.asarray(omega_e, float) - params.J_hat * gains.K_P * sg * q_e[1:]


@njit(cache=True)
def nb_linear_kappa_derivatives(x, ref, K_xi, K_nu, m_hat, f_applied):
    """``κ̇`` and ``κ̈`` of the PD position law used by GTC."""
    R = nb_qmat(x[6:10])
    b3 = R[:, 2].copy()
    om = x[10:13]
    b3_dot = R @ nb_cross(om, np.array([0.0, 0.0, 1.0]))
    acc = f_applied / m_hat * b3
    acc[2] -= 9.80665
    nu_e = x[3:6] - ref[3:6]
    a_e = acc - ref[6:9]
    kappa = m_hat * (ref[6:9] - K_xi * (x[0:3] - ref[0:3]) - K_nu * nu_e)
    kappa[2] += m_hat * 9.80665
    kd = m_hat * (ref[9:12] - K_xi * nu_e - K_nu * a_e)
    f_dot = nb_dot(kd, b3) + nb_dot(kappa, b3_dot)
    j_e = (f_dot * b3 + f_applied * b3_dot) / m_hat - ref[9:12]
    kdd = m_hat * (ref[12:15] - K_xi * a_e - K_nu * j_e)
    return kappa, kd, kdd


# ---------------------------------------------------------------------------
# runtime controllers
# ---------------------------------------------------------------------------

class _TangentRemapMixin:
    def _reference(self, x):
        R = nb_qmat(x[6:10])
        q_d, om_d, al_d, _, _ = nb_remap(R, self.Rd, self.Rd_dot, self.Rd_ddot, x[10:13])
        if self._q_d_prev is not None and np.dot(q_d, self._q_d_prev) < 0.0:
            q_d = -q_d
        self._q_d_prev = q_d
        return R, q_d, om_d, al_d


class GTCController(_TangentRemapMixin, ControllerBase):
    name = "gtc"

    def __init__(self, params, gains: GTCGains):
        super().__init__(params)
        self.gains = gains
        self._q_d_prev = None
        self.floor = kappa_floor_default(params)

    def position_step(self, x, ref):
        g = self.gains
        kappa, kd, kdd = nb_linear_kappa_derivatives(x, ref, g.K_xi, g.K_nu, self.m_hat, self.f_applied)
        n = np.linalg.norm(kappa)
        if n < self.floor:
            kappa = kappa * (self.floor / n) if n > 0 else np.array([0.0, 0.0, self.floor])
            kd, kdd = np.zeros(3), np.zeros(3)
        self.kappa = kappa
        self.s_xi = x[3:6] - ref[3:6]
        self._set_rotation_from_kappa(kd, kdd, ref)

    def attitude_step(self, x, dt=None):
        R, q_d, om_d, al_d = self._reference(x)
        tau, _ = nb_gtc_torque(R, x[10:13], self.Rd, om_d, al_d, self.gains.K_R, self.gains.K_omega, self.J_hat)
        q_e, om_e, _ = nb_quaternion_errors(x[6:10], x[10:13], q_d, om_d)
        self.q_d, self.omega_d, self.q_e, self.s_q = q_d, om_d, q_e, om_e
        return self._thrust(x[6:10]), tau


class QPDController(_TangentRemapMixin, ControllerBase):
    name = "qpd"

    def __init__(self, params, gains: QPDGains):
        super().__init__(params)
        self.gains = gains
        self.pos = gains.position
        self._q_d_prev = None
        floor = None if self.pos is None else self.pos.kappa_floor
        self.floor = floor if floor is not None else kappa_floor_default(params)
        self._zeros = np.zeros(3)

    def position_step(self, x, ref):
        p = self.pos
        kappa, s, _, _, floored = nb_position_law(x, ref, p.Lambda_xi, p.K_xi, p.phi_xi, self.m_hat, self.floor)
        self.kappa, self.s_xi = kappa, s
        kd, kdd, _ = nb_qsmc_kappa_derivatives(x, ref, kappa, s, p.Lambda_xi, p.K_xi, self._zeros, self._zeros,
                                               p.phi_xi, self.m_hat, self.f_applied, floored)
        self._set_rotation_from_kappa(kd, kdd, ref)

    def attitude_step(self, x, dt=None):
        _, q_d, om_d, _ = self._reference(x)
        tau, q_e = nb_qpd_torque(x[6:10], x[10:13], q_d, om_d, self.gains.K_P, self.gains.K_D, self.J_hat)
        self.q_d, self.omega_d, self.q_e = q_d, om_d, q_e
        self.s_q = x[10:13] - om_d
        return self._thrust(x[6:10]), tau


@njit(cache=True)
def _nb_wrap(a):
    out = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    for i in range(out.size):
        if out[i] == -np.pi:
            out[i] = np.pi
    return out


@njit(cache=True)
def nb_esmc_attitude(q, om, eta_d, eta_dot_d, eta_ddot_d, K, Lam, phi, J_hat):
    """Compiled ESMC attitude step.

    Returns ``(τ, s_η, η, q_d, q_e)``; the caller checks ``η[1]`` against the
    gimbal-lock guard (the value is computed before any division by cos θ).
    """
    w, x, y, z = q[0], q[1], q[2], q[3]
    st = min(1.0, max(-1.0, 2.0 * (w * y - z * x)))
    eta = np.empty(3)
    eta[0] = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    eta[1] = np.arcsin(st)
    eta[2] = np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    eta = _nb_wrap(eta)
    eta_e = _nb_wrap(eta - eta_d)
    s = om - eta_dot_d + Lam * eta_e
    a = np.array([(J_hat[1] - J_hat[2]) / J_hat[0], (J_hat[2] - J_hat[0]) / J_hat[1],
                  (J_hat[0] - J_hat[1]) / J_hat[2]])
    coupling = a * np.array([om[1] * om[2], om[0] * om[2], om[0] * om[1]])
    tau = J_hat * (eta_ddot_d - Lam * eta_e - K * np.tanh(s / phi) - coupling)
    # yaw-pitch-roll quaternion of the set-point, scalar part non-negative
    cr, sr = np.cos(0.5 * eta_d[0]), np.sin(0.5 * eta_d[0])
    cp, sp = np.cos(0.5 * eta_d[1]), np.sin(0.5 * eta_d[1])
    cy, sy = np.cos(0.5 * eta_d[2]), np.sin(0.5 * eta_d[2])
    q_d = np.array([cy * cp * cr + sy * sp * sr, cy * cp * sr - sy * sp * cr,
                    cy * sp * cr + sy * cp * sr, sy * cp * cr - cy * sp * sr])
    if q_d[0] < 0.0:
        q_d = -q_d
    q_e = nb_qmul(nb_qconj(q_d), q)
    return tau, s, eta, q_d, q_e


class ESMCController(ControllerBase):
    """Euler-angle SMC.

    Attitude references arrive as Euler angles (gimbal scenarios) or are
    produced by the position loop; in the latter case the roll/pitch set-point
    rates are obtained by backward differences at the position-loop rate.
    """

    name = "esmc"

    def __init__(self, params, gains: ESMCGains, position_dt=1.0 / 250.0):
        super().__init__(params)
        self.gains = gains
        self.position_dt = position_dt
        self.eta_d = np.zeros(3)
        self.eta_dot_d = np.zeros(3)
        self.eta_ddot_d = np.zeros(3)
        self._history = []
        self.eta = np.zeros(3)
        self.s_eta = np.zeros(3)
        self.f_cmd = self.m_hat * GRAVITY

    def set_euler_reference(self, eta_d, eta_dot_d, eta_ddot_d):
        self.eta_d = np.asarray(eta_d, float)
        self.eta_dot_d = np.asarray(eta_dot_d, float)
        self.eta_ddot_d = np.asarray(eta_ddot_d, float)

    def set_attitude_reference(self, Rd, Rd_dot, Rd_ddot):
        raise NotImplementedError("ESMC consumes Euler-angle references")

    def position_step(self, x, ref):
        g = self.gains
        eta = euler_from_quaternion(x[6:10])
        f, phi_d, theta_d, s = esmc_position(eta, x[0:3] - ref[0:3], x[3:6] - ref[3:6], ref[6:9], ref[15], g,
                                             self.m_hat)
        self.f_cmd = f
        self.s_xi = s
        cur = np.array([phi_d, theta_d])
        self._history.append(cur)
        if len(self._history) > 3:
            self._history.pop(0)
        h = self.position_dt
        rates = np.zeros(2)
        accels = np.zeros(2)
        if len(self._history) >= 2:
            rates = (self._history[-1] - self._history[-2]) / h
        if len(self._history) >= 3:
            accels = (self._history[-1] - 2.0 * self._history[-2] + self._history[-3]) / (h * h)
        self.eta_d = np.array([phi_d, theta_d, ref[15]])
        self.eta_dot_d = np.array([rates[0], rates[1], ref[16]])
        self.eta_ddot_d = np.array([accels[0], accels[1], ref[17]])
        self.kappa = f * euler_axis(eta)

    def attitude_step(self, x, dt=None):
        g = self.gains
        tau, s, eta, q_d, q_e = nb_esmc_attitude(x[6:10], x[10:13], self.eta_d, self.eta_dot_d, self.eta_ddot_d,
                                                 g.K_eta, g.Lambda_eta, g.phi_eta, self.J_hat)
        if abs(eta[1]) >= THETA_GUARD:
            raise GimbalLock(eta[1])
        self.eta = eta
        self.s_eta = s
        self.s_q = s
        self.q_d = q_d
        self.omega_d = self.eta_dot_d
        self.q_e = q_e
        f = self.fixed_thrust if self.fixed_thrust is not None else self.f_cmd
        return max(f, 0.0), tau


def euler_axis(eta):
    """Body thrust axis of the yaw-pitch-roll attitude."""
    phi, theta, psi = eta
    return np.array([np.cos(psi) * np.sin(theta) * np.cos(phi) + np.sin(psi) * np.sin(phi),
                     np.sin(psi) * np.sin(theta) * np.cos(phi) - np.cos(psi) * np.sin(phi),
                     np.cos(theta) * np.cos(phi)])


# ---------------------------------------------------------------------------
# ESMC on its own simplified model
# ---------------------------------------------------------------------------

def simplified_rhs(state, tau, J):
    """``η̈ = a ∘ (cross products of η̇) + τ ⊘ J`` on ``[η, η̇]``."""
    eta_dot = state[3:6]
    a = inertia_ratios(J)
    acc = a * np.array([eta_dot[1] * eta_dot[2], eta_dot[0] * eta_dot[2], eta_dot[0] * eta_dot[1]]) + tau / J
    return np.concatenate([eta_dot, acc])


def simulate_esmc_simplified(amplitude, gains: ESMCGains, params, duration=30.0, hold=10.0, dt=5e-4,
                             control_dt=2e-3):
    """Gimbal sinusoid tracked by ESMC on the simplified decoupled model.

    Returns ``(t, η)`` sampled at the control rate.
    """
    n_sub = int(round(control_dt / dt))
    n_ctrl = int(round(duration / control_dt))
    state = np.zeros(6)
    ts = np.empty(n_ctrl + 1)
    etas = np.empty((n_ctrl + 1, 3))
    for k in range(n_ctrl + 1):
        t = k * control_dt
        ts[k] = t
        etas[k] = state[:3]
        if k == n_ctrl:
            break
        ref = gimbal_sinusoid(amplitude, t, hold=hold)
        tau, _, _ = esmc_attitude_torque(state[:3], state[3:6], ref.eta_d, ref.eta_dot_d, ref.eta_ddot_d, gains,
                                         params.J_hat)
        for _ in range(n_sub):
            k1 = simplified_rhs(state, tau, params.J)
            k2 = simplified_rhs(state + 0.5 * dt * k1, tau, params.J)
            k3 = simplified_rhs(state + 0.5 * dt * k2, tau, params.J)
            k4 = simplified_rhs(state + dt * k3, tau, params.J)
            state = state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            etas[k + 1:] = np.nan
            ts[k + 1:] = (np.arange(k + 1, n_ctrl + 1)) * control_dt
            break
    return ts, etas
