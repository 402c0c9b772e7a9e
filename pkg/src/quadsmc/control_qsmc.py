"""Quaternion sliding-mode control (QSMC) and its adaptive variant (AQSMC).

Attitude: ``s_q = ω_e + Λ_q sgn₊(q_we) q⃗_e`` with a tanh boundary layer.
Position: ``s_ξ = ν_e + Λ_ξ ξ_e`` producing the desired thrust vector ``κ``,
from which the thrust magnitude and the attitude reference are extracted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .math3d import (UnitQuaternion, nb_cross, nb_dot, nb_qconj, nb_qmat, nb_qmul, nb_sgn_plus, quat_conjugate,
                     quat_multiply, sgn_plus)
from .refgen import CHI_MIN, nb_remap, nb_rotation_reference
from .vehicle import GRAVITY


def _vec3(x):
    return np.broadcast_to(np.asarray(x, dtype=float), (3,)).copy()


@dataclass
class ErrorState:
    xi_e: np.ndarray
    nu_e: np.ndarray
    q_e: np.ndarray
    omega_e: np.ndarray


@dataclass
class AttitudeGains:
    """Diagonal attitude gains; ``K_q`` is in rad/s² (the torque term is ``Ĵ K_q``)."""

    Lambda_q: np.ndarray
    K_q: np.ndarray
    phi_q: np.ndarray
    pi_q: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        for name in ("Lambda_q", "K_q", "phi_q", "pi_q"):
            val = _vec3(getattr(self, name))
            if np.any(val <= 0):
                raise ValueError(f"{name} must be positive")
            setattr(self, name, val)


@dataclass
class PositionGains:
    Lambda_xi: np.ndarray
    K_xi: np.ndarray
    phi_xi: np.ndarray
    pi_xi: np.ndarray = field(default_factory=lambda: np.ones(3))
    kappa_floor: float | None = None  # N; default 0.05·m̂g

    def __post_init__(self):
        for name in ("Lambda_xi", "K_xi", "phi_xi", "pi_xi"):
            val = _vec3(getattr(self, name))
            if np.any(val <= 0):
                raise ValueError(f"{name} must be positive")
            setattr(self, name, val)
        if self.kappa_floor is not None and self.kappa_floor <= 0:
            raise ValueError("kappa_floor must be positive")


@dataclass
class AdaptParams:
    Gamma: np.ndarray
    epsilon: np.ndarray
    mu: np.ndarray
    K_th: np.ndarray

    def __post_init__(self):
        for name in ("Gamma", "epsilon", "mu", "K_th"):
            val = _vec3(getattr(self, name))
            if np.any(val <= 0):
                raise ValueError(f"{name} must be positive")
            setattr(self, name, val)


@dataclass
class AdaptiveState:
    K_q_diag: np.ndarray
    K_xi_diag: np.ndarray
    dK_q: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dK_xi: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ddK_xi: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self):
        return AdaptiveState(*(np.array(getattr(self, f)) for f in
                               ("K_q_diag", "K_xi_diag", "dK_q", "dK_xi", "ddK_xi")))


@dataclass
class UncertaintyBounds:
    delta_q_bar: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_xi_bar: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_a_bar: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_alpha_bar: np.ndarray = field(default_factory=lambda: np.zeros(3))  # torque units, N·m
    rho_xi: float = 1.0

    def __post_init__(self):
        for name in ("delta_q_bar", "delta_xi_bar", "d_a_bar", "d_alpha_bar"):
            val = _vec3(getattr(self, name))
            if np.any(val < 0):
                raise ValueError(f"{name} must be nonnegative")
            setattr(self, name, val)
        if self.rho_xi <= 0:
            raise ValueError("rho_xi must be positive")


# ---------------------------------------------------------------------------
# error algebra and the control laws (plain numpy; the simulator uses the
# numba kernels further below)
# ---------------------------------------------------------------------------

def attitude_error(q_d, q):
    """``q_e = q_d* ⊗ q``."""
    return quat_multiply(quat_conjugate(q_d), q)


def error_quaternion_rate(q_e, omega_e):
    """``q̇_e = ½ [−q⃗_e·ω_e, q_we ω_e + q⃗_e × ω_e]``."""
    q_e = q_e.as_array() if isinstance(q_e, UnitQuaternion) else np.asarray(q_e, float)
    w, v = q_e[0], q_e[1:]
    return np.concatenate([[-0.5 * np.dot(v, omega_e)], 0.5 * (w * omega_e + np.cross(v, omega_e))])


def _q_array(q):
    return q.as_array() if isinstance(q, UnitQuaternion) else np.asarray(q, float)


def sliding_surface_attitude(e: ErrorState, g: AttitudeGains):
    q_e = _q_array(e.q_e)
    return np.asarray(e.omega_e, float) + g.Lambda_q * sgn_plus(q_e[0]) * q_e[1:]


def attitude_control(e: ErrorState, qdot_vec_e, omega, omega_dot_d, g: AttitudeGains, p):
    """QSMC torque.

    ``τ = Ĵ ω̇_d + ω × Ĵω − Ĵ Λ_q sgn₊(q_we) q̇⃗_e − Ĵ K_q tanh(s_q ⊘ φ_q)``
    """
    q_e = _q_array(e.q_e)
    sg = sgn_plus(q_e[0])
    s = sliding_surface_attitude(e, g)
    J = p.J_hat
    omega = np.asarray(omega, float)
    return (J * np.asarray(omega_dot_d, float) + np.cross(omega, J * omega)
            - J * g.Lambda_q * sg * np.asarray(qdot_vec_e, float) - J * g.K_q * np.tanh(s / g.phi_q))


def sliding_surface_position(e: ErrorState, g: PositionGains):
    return np.asarray(e.nu_e, float) + g.Lambda_xi * np.asarray(e.xi_e, float)


def kappa_floor_default(p):
    return 0.05 * p.m_hat * GRAVITY


def enforce_thrust_floor(kappa, floor):
    n = np.linalg.norm(kappa)
    if n >= floor:
        return kappa
    if n == 0.0:
        return np.array([0.0, 0.0, floor])
    return kappa * (floor / n)


def position_control(e: ErrorState, xi_dd_d, g: PositionGains, p, K_xi=None):
    """Desired thrust vector ``κ = m̂(g e₃ + ξ̈_d − Λ_ξ ν_e − K_ξ tanh(s_ξ ⊘ φ_ξ))`` with the norm floor."""
    K = g.K_xi if K_xi is None else np.asarray(K_xi, float)
    s = sliding_surface_position(e, g)
    kappa = p.m_hat * (GRAVITY * np.array([0.0, 0.0, 1.0]) + np.asarray(xi_dd_d, float)
                       - g.Lambda_xi * np.asarray(e.nu_e, float) - K * np.tanh(s / g.phi_xi))
    floor = g.kappa_floor if g.kappa_floor is not None else kappa_floor_default(p)
    return enforce_thrust_floor(kappa, floor)


def thrust_from_kappa(kappa, q):
    """``f = κ · L_q(e₃)`` using the explicit quadratic form, clamped at 0."""
    w, x, y, z = _q_array(q)
    b3 = np.array([2.0 * (x * z + w * y), 2.0 * (y * z - w * x), w * w - x * x - y * y + z * z])
    return max(float(np.dot(kappa, b3)), 0.0)


def gain_condition(bounds: UncertaintyBounds, pi, J_hat=None, rho=None):
    """Smallest switching gain satisfying the robustness condition.

    Attitude (pass ``J_hat``): ``K_ii = (δ̄_q + d̄_α + π)/Ĵ_ii`` with the bounds
    in torque units. Position (pass ``rho``): ``K_ii = (δ̄_ξ + d̄_a + π)/ρ``.
    """
    pi = _vec3(pi)
    if (J_hat is None) == (rho is None):
        raise ValueError("pass exactly one of J_hat or rho")
    if J_hat is not None:
        return (bounds.delta_q_bar + bounds.d_alpha_bar + pi) / _vec3(J_hat)
    return (bounds.delta_xi_bar + bounds.d_a_bar + pi) / float(rho)


def boundary_layer_threshold(Delta, pi, phi):
    """``r = Δ/(Δ+π)`` and ``s* = φ atanh(r)``."""
    Delta, pi, phi = _vec3(Delta), _vec3(pi), _vec3(phi)
    r = Delta / (Delta + pi)
    return r, phi * np.arctanh(r)


def attitude_reaching_constants(Delta, pi, phi, J):
    """``(c1, c2)`` of the attitude reaching bound ``V̇ ≤ −c1 √V + c2``."""
    Delta, pi = _vec3(Delta), _vec3(pi)
    r, s_star = boundary_layer_threshold(Delta, pi, phi)
    c1 = np.min((Delta + pi) * (1.0 - r)) * np.sqrt(2.0) / np.sqrt(np.max(_vec3(J)))
    c2 = float(np.sum(s_star * (Delta + pi)))
    return float(c1), c2


def position_reaching_constants(Delta, pi, phi):
    """``(c3, c4)`` of the position reaching bound."""
    Delta, pi = _vec3(Delta), _vec3(pi)
    r, s_star = boundary_layer_threshold(Delta, pi, phi)
    c3 = float(np.min((Delta + pi) * (1.0 - r)) * np.sqrt(2.0))
    c4 = float(np.sum(s_star * (Delta + pi)))
    return c3, c4


def reaching_time(V0, c_rate, c_const):
    """``t* = max(0, (2/c)(√V0 − c'/c))`` and the terminal ball radius ``(c'/c)²``."""
    t_star = max(0.0, 2.0 / c_rate * (np.sqrt(V0) - c_const / c_rate))
    return t_star, (c_const / c_rate) ** 2


def reaching_bound(t, V0, c_rate, c_const):
    """Upper bound on V(t) from the reaching inequality."""
    t = np.asarray(t, float)
    t_star, ball = reaching_time(V0, c_rate, c_const)
    early = (np.sqrt(V0) - 0.5 * c_rate * t) ** 2
    return np.where(t <= t_star, np.maximum(early, ball), ball)


# ---------------------------------------------------------------------------
# adaptation
# ---------------------------------------------------------------------------

@njit(cache=True)
def nb_adapt_channel(K, s, Gamma, scale, eps, mu, K_th, phi, dt):
    """One forward-Euler step of the switching-gain law; returns ``(K', K̇)``."""
    Kn = np.empty(3)
    dK = np.empty(3)
    for i in range(3):
        if K[i] > K_th[i]:
            a = abs(s[i])
            dK[i] = Gamma[i] * scale[i] * a * np.tanh(a / phi[i] - eps[i])
            Kn[i] = K[i] + dK[i] * dt
            # the floor branch takes over once the gain reaches the threshold
            if Kn[i] < K_th[i]:
                Kn[i] = K_th[i]
        else:
            dK[i] = mu[i]
            Kn[i] = K[i] + mu[i] * dt
    return Kn, dK


@njit(cache=True)
def nb_adapt_second_derivative(K, s, s_dot, Gamma, scale, eps, K_th, phi):
    out = np.zeros(3)
    for i in range(3):
        if K[i] > K_th[i]:
            a = abs(s[i])
            arg = a / phi[i] - eps[i]
            sg = 1.0 if s[i] >= 0.0 else -1.0
            out[i] = Gamma[i] * scale[i] * sg * s_dot[i] * (np.tanh(arg) + (a / phi[i]) / np.cosh(arg) ** 2)
    return out


def adapt_step(a: AdaptiveState, s_q, s_xi, params_q: AdaptParams, params_xi: AdaptParams, p, dt,
               phi_q, phi_xi, s_xi_dot=None):
    """Advance both adaptive gains by one step and return the new state.

    The attitude channel scales the rate by ``Ĵ_ii``; the position channel by
    the nominal ``ρ̂_ξ = 1``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    Kq, dKq = nb_adapt_channel(_vec3(a.K_q_diag), _vec3(s_q), params_q.Gamma, p.J_hat, params_q.epsilon,
                               params_q.mu, params_q.K_th, _vec3(phi_q), float(dt))
    ones = np.ones(3)
    Kx, dKx = nb_adapt_channel(_vec3(a.K_xi_diag), _vec3(s_xi), params_xi.Gamma, ones, params_xi.epsilon,
                               params_xi.mu, params_xi.K_th, _vec3(phi_xi), float(dt))
    s_dot = np.zeros(3) if s_xi_dot is None else _vec3(s_xi_dot)
    ddKx = nb_adapt_second_derivative(_vec3(a.K_xi_diag), _vec3(s_xi), s_dot, params_xi.Gamma, ones,
                                      params_xi.epsilon, params_xi.K_th, _vec3(phi_xi))
    return AdaptiveState(Kq, Kx, dKq, dKx, ddKx)


def legacy_gain_step(k, s, gamma, dt):
    """Monotone switching-gain growth ``k' = k + γ|s| dt``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return np.asarray(k, float) + gamma * np.abs(np.asarray(s, float)) * dt


# ---------------------------------------------------------------------------
# numba kernels used by the runtime controllers
# ---------------------------------------------------------------------------

@njit(cache=True)
def nb_quaternion_errors(q, om, q_d, om_d):
    q_e = nb_qmul(nb_qconj(q_d), q)
    om_e = om - om_d
    qd_vec = 0.5 * (q_e[0] * om_e + nb_cross(q_e[1:4], om_e))
    return q_e, om_e, qd_vec


@njit(cache=True)
def nb_qsmc_torque(q, om, q_d, om_d, al_d, Lam, K, phi, J_hat, sign_aware):
    """QSMC torque; ``sign_aware=False`` drops sgn₊ (the unwinding-prone variant)."""
    q_e, om_e, qd_vec = nb_quaternion_errors(q, om, q_d, om_d)
    sg = nb_sgn_plus(q_e[0]) if sign_aware else 1.0
    s = om_e + Lam * sg * q_e[1:4]
    Jw = J_hat * om
    tau = J_hat * al_d + nb_cross(om, Jw) - J_hat * Lam * sg * qd_vec - J_hat * K * np.tanh(s / phi)
    return tau, s, q_e


@njit(cache=True)
def nb_position_law(x, ref, Lam, K, phi, m_hat, floor):
    xi_e = x[0:3] - ref[0:3]
    nu_e = x[3:6] - ref[3:6]
    s = nu_e + Lam * xi_e
    kappa = m_hat * (ref[6:9] - Lam * nu_e - K * np.tanh(s / phi))
    kappa[2] += m_hat * 9.80665
    n = np.sqrt(nb_dot(kappa, kappa))
    floored = False
    if n < floor:
        floored = True
        if n == 0.0:
            kappa[:] = 0.0
            kappa[2] = floor
        else:
            kappa = kappa * (floor / n)
    return kappa, s, xi_e, nu_e, floored


@njit(cache=True)
def nb_motion_estimate(x, f_applied, m_hat, ref):
    """Acceleration and jerk errors from the nominal model and the applied thrust."""
    R = nb_qmat(x[6:10])
    b3 = R[:, 2].copy()
    om = x[10:13]
    b3_dot = R @ nb_cross(om, np.array([0.0, 0.0, 1.0]))
    acc = f_applied / m_hat * b3
    acc[2] -= 9.80665
    a_e = acc - ref[6:9]
    return a_e, b3, b3_dot


@njit(cache=True)
def nb_qsmc_kappa_derivatives(x, ref, kappa, s, Lam, K, dK, ddK, phi, m_hat, f_applied, floored):
    """``κ̇`` and ``κ̈`` of the sliding-mode position law."""
    if floored:
        return np.zeros(3), np.zeros(3), np.zeros(3)
    nu_e = x[3:6] - ref[3:6]
    a_e, b3, b3_dot = nb_motion_estimate(x, f_applied, m_hat, ref)
    s_dot = a_e + Lam * nu_e
    th = np.tanh(s / phi)
    sech2 = 1.0 - th * th
    kd = m_hat * (ref[9:12] - Lam * a_e - dK * th - K * sech2 * s_dot / phi)
    f_dot = nb_dot(kd, b3) + nb_dot(kappa, b3_dot)
    jerk = (f_dot * b3 + f_applied * b3_dot) / m_hat
    j_e = jerk - ref[9:12]
    s_ddot = j_e + Lam * a_e
    ratio = s_dot / phi
    kdd = m_hat * (ref[12:15] - Lam * j_e - ddK * th
                   - sech2 * (2.0 * dK * ratio + K * s_ddot / phi - 2.0 * K * th * ratio * ratio))
    return kd, kdd, s_dot


@njit(cache=True)
def nb_lyapunov(s_q, s_xi, J, K_q, K_q_star, Gamma_q, K_xi, K_xi_star, Gamma_xi):
    Vq = 0.5 * (J[0] * s_q[0] ** 2 + J[1] * s_q[1] ** 2 + J[2] * s_q[2] ** 2)
    Vxi = 0.5 * nb_dot(s_xi, s_xi)
    extra = 0.0
    for i in range(3):
        extra += (K_q[i] - K_q_star[i]) ** 2 / Gamma_q[i] + (K_xi[i] - K_xi_star[i]) ** 2 / Gamma_xi[i]
    return Vq, Vxi, Vq + Vxi + 0.5 * extra


# Flat layouts used by the in-place kernels. Returning fresh arrays from a
# compiled function costs more than the control law itself, so the runtime
# controllers keep their parameters in ``P`` and their evolving state in ``W``.
P_LAM_Q, P_PHI_Q, P_J, P_LAM_XI, P_PHI_XI = 0, 3, 6, 9, 12
P_M, P_FLOOR = 15, 16
P_GQ, P_EPSQ, P_MUQ, P_KTHQ = 17, 20, 23, 26
P_GX, P_EPSX, P_MUX, P_KTHX = 29, 32, 35, 38
P_SIZE = 41

W_KQ, W_DKQ, W_KX, W_DKX, W_DDKX = 0, 3, 6, 9, 12
W_SQ, W_SX, W_SXD = 15, 18, 21
W_QE, W_QD, W_OMD, W_KAPPA = 24, 28, 32, 35
W_RD, W_RDD, W_RDDD = 38, 47, 56
W_FAPP, W_TAU, W_F, W_CHI, W_FIXED = 65, 66, 69, 70, 71
W_SIZE = 72


@njit(cache=True)
def _mat_from(W, i):
    M = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            M[r, c] = W[i + 3 * r + c]
    return M


@njit(cache=True)
def _mat_into(W, i, M):
    for r in range(3):
        for c in range(3):
            W[i + 3 * r + c] = M[r, c]


@njit(cache=True)
def nb_qsmc_position_inplace(x, ref, P, W):
    """Position law, ``κ̇``/``κ̈`` and rotation reference; returns ``‖χ‖``."""
    Lam = P[P_LAM_XI:P_LAM_XI + 3]
    phi = P[P_PHI_XI:P_PHI_XI + 3]
    K = W[W_KX:W_KX + 3]
    kappa, s, _, _, floored = nb_position_law(x, ref, Lam, K, phi, P[P_M], P[P_FLOOR])
    kd, kdd, s_dot = nb_qsmc_kappa_derivatives(x, ref, kappa, s, Lam, K, W[W_DKX:W_DKX + 3],
                                               W[W_DDKX:W_DDKX + 3], phi, P[P_M], W[W_FAPP], floored)
    Rd, Rd_dot, Rd_ddot, chi, _ = nb_rotation_reference(kappa, kd, kdd, ref[15], ref[16], ref[17])
    W[W_KAPPA:W_KAPPA + 3] = kappa
    W[W_SX:W_SX + 3] = s
    W[W_SXD:W_SXD + 3] = s_dot
    if chi >= CHI_MIN:
        _mat_into(W, W_RD, Rd)
        _mat_into(W, W_RDD, Rd_dot)
        _mat_into(W, W_RDDD, Rd_ddot)
    W[W_CHI] = chi
    return chi


@njit(cache=True)
def nb_qsmc_attitude_inplace(x, P, W, sign_aware):
    """Reference remap, hemisphere continuity, torque and thrust; returns the thrust."""
    R = nb_qmat(x[6:10])
    q_d, om_d, al_d, _, _ = nb_remap(R, _mat_from(W, W_RD), _mat_from(W, W_RDD), _mat_from(W, W_RDDD), x[10:13])
    # the previous q_d (identity at start) fixes the hemisphere of the new one
    if nb_dot(q_d, W[W_QD:W_QD + 4]) < 0.0:
        q_d = -q_d
    tau, s, q_e = nb_qsmc_torque(x[6:10], x[10:13], q_d, om_d, al_d, P[P_LAM_Q:P_LAM_Q + 3], W[W_KQ:W_KQ + 3],
                                 P[P_PHI_Q:P_PHI_Q + 3], P[P_J:P_J + 3], sign_aware)
    W[W_QD:W_QD + 4] = q_d
    W[W_OMD:W_OMD + 3] = om_d
    W[W_QE:W_QE + 4] = q_e
    W[W_SQ:W_SQ + 3] = s
    W[W_TAU:W_TAU + 3] = tau
    if np.isnan(W[W_FIXED]):
        f = thrust_from_kappa_fast(W[W_KAPPA:W_KAPPA + 3], x[6:10])
    else:
        f = W[W_FIXED]
    W[W_F] = f
    return f


@njit(cache=True)
def nb_aqsmc_adapt_inplace(P, W, with_position, dt):
    """Bounded-law update of both channels; the position channel also gets ``K̈_ξ``."""
    Kq = W[W_KQ:W_KQ + 3].copy()
    Kn, dK = nb_adapt_channel(Kq, W[W_SQ:W_SQ + 3], P[P_GQ:P_GQ + 3], P[P_J:P_J + 3], P[P_EPSQ:P_EPSQ + 3],
                              P[P_MUQ:P_MUQ + 3], P[P_KTHQ:P_KTHQ + 3], P[P_PHI_Q:P_PHI_Q + 3], dt)
    W[W_KQ:W_KQ + 3] = Kn
    W[W_DKQ:W_DKQ + 3] = dK
    if not with_position:
        return
    ones = np.ones(3)
    Kx = W[W_KX:W_KX + 3].copy()
    s = W[W_SX:W_SX + 3]
    Kth = P[P_KTHX:P_KTHX + 3]
    Kn, dK = nb_adapt_channel(Kx, s, P[P_GX:P_GX + 3], ones, P[P_EPSX:P_EPSX + 3], P[P_MUX:P_MUX + 3], Kth,
                              P[P_PHI_XI:P_PHI_XI + 3], dt)
    ddK = nb_adapt_second_derivative(Kx, s, W[W_SXD:W_SXD + 3], P[P_GX:P_GX + 3], ones, P[P_EPSX:P_EPSX + 3],
                                     Kth, P[P_PHI_XI:P_PHI_XI + 3])
    for i in range(3):
        # below the threshold K_ξ ramps at μ, which the reference chain treats as constant
        if Kx[i] <= Kth[i]:
            dK[i] = 0.0
    W[W_KX:W_KX + 3] = Kn
    W[W_DKX:W_DKX + 3] = dK
    W[W_DDKX:W_DDKX + 3] = ddK


# ---------------------------------------------------------------------------
# runtime controllers
# ---------------------------------------------------------------------------

class ControllerFailure(RuntimeError):
    """Raised by a controller when its law is undefined (recorded as trial failure)."""

    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


class ControllerBase:
    """Common interface used by the simulator.

    ``position_step`` runs at the position-loop rate in free flight;
    ``set_attitude_reference`` / ``set_euler_reference`` feed attitude-only
    references; ``attitude_step`` runs at the attitude-loop rate and returns
    ``(f, τ)``. After each step the controller exposes logging attributes.
    """

    name = "base"
    adaptive = False

    def __init__(self, params):
        self.params = params
        self.J_hat = np.asarray(params.J_hat, float)
        self.m_hat = float(params.m_hat)
        self.fixed_thrust = None
        self.f_applied = self.m_hat * GRAVITY
        self.q_e = np.array([1.0, 0.0, 0.0, 0.0])
        self.q_d = np.array([1.0, 0.0, 0.0, 0.0])
        self.omega_d = np.zeros(3)
        self.s_q = np.zeros(3)
        self.s_xi = np.zeros(3)
        self.kappa = np.array([0.0, 0.0, self.m_hat * GRAVITY])
        self.Rd = np.eye(3)
        self.Rd_dot = np.zeros((3, 3))
        self.Rd_ddot = np.zeros((3, 3))

    # free-flight reference chain -------------------------------------------
    def _set_rotation_from_kappa(self, kd, kdd, ref):
        Rd, Rd_dot, Rd_ddot, chi, _ = nb_rotation_reference(self.kappa, kd, kdd, ref[15], ref[16], ref[17])
        if chi < CHI_MIN:
            raise ControllerFailure("singular_heading", f"thrust axis parallel to heading (|chi|={chi:.2e})")
        self.Rd, self.Rd_dot, self.Rd_ddot = Rd, Rd_dot, Rd_ddot

    def set_attitude_reference(self, Rd, Rd_dot, Rd_ddot):
        self.Rd, self.Rd_dot, self.Rd_ddot = Rd, Rd_dot, Rd_ddot

    def set_euler_reference(self, eta_d, eta_dot_d, eta_ddot_d):
        from .trajectory import rotation_reference_from_euler
        self.set_attitude_reference(*rotation_reference_from_euler(eta_d, eta_dot_d, eta_ddot_d))

    def _thrust(self, q):
        if self.fixed_thrust is not None:
            return self.fixed_thrust
        return thrust_from_kappa_fast(self.kappa, q)

    def adapt(self, dt):
        pass

    def gains_snapshot(self):
        return np.zeros(3), np.zeros(3)


@njit(cache=True)
def thrust_from_kappa_fast(kappa, q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    f = (kappa[0] * 2.0 * (x * z + w * y) + kappa[1] * 2.0 * (y * z - w * x)
         + kappa[2] * (w * w - x * x - y * y + z * z))
    return max(f, 0.0)


def _buffer_view(name, start, size, shape=None):
    def get(self):
        v = self._W[start:start + size]
        return v.reshape(shape) if shape else v

    def set(self, value):
        self._W[start:start + size] = np.asarray(value, float).reshape(-1)
    return property(get, set, doc=f"``{name}`` (view into the work buffer)")


class QSMCController(ControllerBase):
    """Fixed-gain quaternion sliding-mode controller."""

    name = "qsmc"

    K_q = _buffer_view("K_q", W_KQ, 3)
    dK_q = _buffer_view("dK_q", W_DKQ, 3)
    K_xi = _buffer_view("K_xi", W_KX, 3)
    dK_xi = _buffer_view("dK_xi", W_DKX, 3)
    ddK_xi = _buffer_view("ddK_xi", W_DDKX, 3)
    s_q = _buffer_view("s_q", W_SQ, 3)
    s_xi = _buffer_view("s_xi", W_SX, 3)
    s_xi_dot = _buffer_view("s_xi_dot", W_SXD, 3)
    q_e = _buffer_view("q_e", W_QE, 4)
    q_d = _buffer_view("q_d", W_QD, 4)
    omega_d = _buffer_view("omega_d", W_OMD, 3)
    kappa = _buffer_view("kappa", W_KAPPA, 3)
    Rd = _buffer_view("Rd", W_RD, 9, (3, 3))
    Rd_dot = _buffer_view("Rd_dot", W_RDD, 9, (3, 3))
    Rd_ddot = _buffer_view("Rd_ddot", W_RDDD, 9, (3, 3))

    @property
    def f_applied(self):
        return float(self._W[W_FAPP])

    @f_applied.setter
    def f_applied(self, value):
        self._W[W_FAPP] = value

    @property
    def fixed_thrust(self):
        v = self._W[W_FIXED]
        return None if np.isnan(v) else float(v)

    @fixed_thrust.setter
    def fixed_thrust(self, value):
        self._W[W_FIXED] = np.nan if value is None else float(value)

    def __init__(self, params, attitude: AttitudeGains, position: PositionGains | None = None,
                 sign_aware=True):
        self._P = np.zeros(P_SIZE)
        self._W = np.zeros(W_SIZE)
        super().__init__(params)
        self.att = attitude
        self.pos = position
        self.sign_aware = sign_aware
        floor = None if position is None else position.kappa_floor
        self.floor = floor if floor is not None else kappa_floor_default(params)
        P = self._P
        P[P_LAM_Q:P_LAM_Q + 3] = attitude.Lambda_q
        P[P_PHI_Q:P_PHI_Q + 3] = attitude.phi_q
        P[P_J:P_J + 3] = self.J_hat
        P[P_M] = self.m_hat
        P[P_FLOOR] = self.floor
        P[P_PHI_XI:P_PHI_XI + 3] = 1.0
        if position is not None:
            P[P_LAM_XI:P_LAM_XI + 3] = position.Lambda_xi
            P[P_PHI_XI:P_PHI_XI + 3] = position.phi_xi
        self.K_q = attitude.K_q
        self.K_xi = position.K_xi if position is not None else np.zeros(3)

    def position_step(self, x, ref):
        chi = nb_qsmc_position_inplace(x, ref, self._P, self._W)
        if chi < CHI_MIN:
            raise ControllerFailure("singular_heading", f"thrust axis parallel to heading (|chi|={chi:.2e})")

    def attitude_step(self, x, dt=None):
        f = nb_qsmc_attitude_inplace(x, self._P, self._W, self.sign_aware)
        return f, self._W[W_TAU:W_TAU + 3].copy()

    def gains_snapshot(self):
        return self.K_q.copy(), self.K_xi.copy()


class AQSMCController(QSMCController):
    """QSMC with online switching-gain adaptation.

    ``law="legacy"`` replaces the bounded law with the monotone growth
    ``K̇ = Γ·scale·|s|`` for contrast experiments.
    """

    name = "aqsmc"
    adaptive = True

    def __init__(self, params, attitude, position=None, adapt_q: AdaptParams | None = None,
                 adapt_xi: AdaptParams | None = None, K_q0=None, K_xi0=None, law="bounded", sign_aware=True):
        super().__init__(params, attitude, position, sign_aware=sign_aware)
        if law not in ("bounded", "legacy"):
            raise ValueError(f"unknown adaptation law {law!r}")
        self.law = law
        self.adapt_q = adapt_q or default_adapt_params_q(attitude.K_q)
        if position is not None:
            self.adapt_xi = adapt_xi or default_adapt_params_xi(position.K_xi)
        else:
            self.adapt_xi = adapt_xi or AdaptParams(np.ones(3), np.full(3, 0.8), np.full(3, 0.02), np.ones(3))
        P = self._P
        for base, ap in ((P_GQ, self.adapt_q), (P_GX, self.adapt_xi)):
            P[base:base + 3] = ap.Gamma
            P[base + 3:base + 6] = ap.epsilon
            P[base + 6:base + 9] = ap.mu
            P[base + 9:base + 12] = ap.K_th
        self.K_q = self.adapt_q.K_th if K_q0 is None else _vec3(K_q0)
        if position is not None:
            self.K_xi = self.adapt_xi.K_th if K_xi0 is None else _vec3(K_xi0)
        self._with_position = position is not None

    def adapt(self, dt):
        if self.law == "bounded":
            nb_aqsmc_adapt_inplace(self._P, self._W, self._with_position, dt)
            return
        aq = self.adapt_q
        self.dK_q = aq.Gamma * self.J_hat * np.abs(self.s_q)
        self.K_q = self.K_q + self.dK_q * dt
        if self._with_position:
            self.dK_xi = self.adapt_xi.Gamma * np.abs(self.s_xi)
            self.ddK_xi = np.zeros(3)
            self.K_xi = self.K_xi + self.dK_xi * dt


# defaults -------------------------------------------------------------------

def lemniscate_qsmc_gains():
    return (AttitudeGains(Lambda_q=np.full(3, 8.0), K_q=np.full(3, 400.0), phi_q=np.array([3.33, 3.33, 5.0])),
            PositionGains(Lambda_xi=np.array([3.0, 3.0, 2.0]), K_xi=np.array([4.0, 4.0, 3.5]),
                          phi_xi=np.full(3, 1.25)))


def gimbal1_qsmc_gains():
    return AttitudeGains(Lambda_q=np.array([11.3, 9.8, 13.3]), K_q=np.array([679.9, 501.6, 99.9]),
                         phi_q=np.array([1.901, 1.818, 1.136]))


def gimbal2_qsmc_gains():
    return AttitudeGains(Lambda_q=np.array([11.62, 9.80, 8.48]), K_q=np.array([4502.3, 1083.5, 121.7]),
                         phi_q=np.array([4.878, 4.424, 4.484]))


# learning rates are not tabulated; these were tuned in simulation
DEFAULT_GAMMA_Q = 1.0e7
DEFAULT_GAMMA_XI = 5.0


def default_adapt_params_q(K_th, Gamma=DEFAULT_GAMMA_Q):
    return AdaptParams(Gamma=np.full(3, Gamma), epsilon=np.full(3, 0.8), mu=np.full(3, 0.02), K_th=_vec3(K_th))


def default_adapt_params_xi(K_th, Gamma=DEFAULT_GAMMA_XI):
    return AdaptParams(Gamma=np.full(3, Gamma), epsilon=np.full(3, 0.8), mu=np.full(3, 0.02), K_th=_vec3(K_th))
