"""Rigid-body quadrotor plant, control allocation and disturbance models."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .math3d import UnitQuaternion, nb_cross, nb_rotate, rotate

GRAVITY = 9.80665

FREE_FLIGHT = 0
GIMBAL = 1
GIMBAL_SINGLE_AXIS = 2
MODES = {"free_flight": FREE_FLIGHT, "gimbal": GIMBAL, "gimbal_single_axis": GIMBAL_SINGLE_AXIS}


class SingularAllocation(ValueError):
    pass


@dataclass(frozen=True)
class VehicleParams:
    """Physical and nominal vehicle parameters.

    ``J`` and ``J_hat`` hold the diagonal of the inertia matrix in kg·m².
    """

    m: float = 0.032
    J: np.ndarray = field(default_factory=lambda: np.array([1.66e-5, 1.66e-5, 2.93e-5]))
    m_hat: float = 0.032
    J_hat: np.ndarray = field(default_factory=lambda: np.array([1.66e-5, 1.66e-5, 2.93e-5]))
    c_t: float = 2.88e-8
    c_q: float = 7.24e-10
    l: float = 0.092
    beta: float = np.pi / 4
    omega_rotor_max: float | None = None

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float).reshape(3)
        J_hat = np.asarray(self.J_hat, dtype=float).reshape(3)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "J_hat", J_hat)
        if self.omega_rotor_max is None:
            # hover at half of full rotor speed
            object.__setattr__(self, "omega_rotor_max", float(np.sqrt(self.m_hat * GRAVITY / self.c_t)))
        scalars = [self.m, self.m_hat, self.c_t, self.c_q, self.l, self.beta, self.omega_rotor_max]
        if min(scalars) <= 0 or np.any(J <= 0) or np.any(J_hat <= 0):
            raise ValueError("vehicle parameters must be positive")

    @classmethod
    def crazyflie(cls, **overrides):
        return cls(**overrides)

    @property
    def u_max(self):
        return self.c_t * self.omega_rotor_max ** 2

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class VehicleState:
    xi: np.ndarray = field(default_factory=lambda: np.zeros(3))
    nu: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: UnitQuaternion = field(default_factory=UnitQuaternion.identity)
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_array(self):
        return np.concatenate([self.xi, self.nu, self.q.as_array(), self.omega])

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), UnitQuaternion.from_array(x[6:10]), x[10:13].copy())


@dataclass(frozen=True)
class WrenchCommand:
    f: float
    tau: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class MotorCommand:
    u: np.ndarray
    npwm: np.ndarray
    saturated: bool
    wrench: WrenchCommand  # wrench actually produced after clamping


@dataclass(frozen=True)
class Disturbance:
    d_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_alpha: np.ndarray = field(default_factory=lambda: np.zeros(3))
    d_a_bar: np.ndarray | None = None
    d_alpha_bar: np.ndarray | None = None

    def __post_init__(self):
        for val, bound in ((self.d_a, self.d_a_bar), (self.d_alpha, self.d_alpha_bar)):
            if bound is not None and np.any(np.abs(val) > np.asarray(bound)):
                raise ValueError("disturbance exceeds its declared bound")


@dataclass(frozen=True)
class Environment:
    """State-dependent disturbance sources evaluated inside the integrator.

    Wind acts as relative-velocity drag inside an axis-aligned gate. The
    gimbal moment is a spring-damper-plus-friction torque about the pivot.
    """

    wind: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c_d: np.ndarray = field(default_factory=lambda: np.full(3, 0.4))
    gate_lo: np.ndarray = field(default_factory=lambda: np.full(3, -np.inf))
    gate_hi: np.ndarray = field(default_factory=lambda: np.full(3, np.inf))
    gimbal_spring: float = 0.0       # N·m/rad
    gimbal_damping: float = 0.0      # N·m·s/rad
    gimbal_friction: float = 0.0     # N·m
    friction_rate: float = 0.05      # rad/s, tanh smoothing scale
    mode: int = FREE_FLIGHT

    def pack(self):
        return np.concatenate([
            np.asarray(self.wind, float), np.asarray(self.c_d, float),
            np.asarray(self.gate_lo, float), np.asarray(self.gate_hi, float),
            [self.gimbal_spring, self.gimbal_damping, self.gimbal_friction, self.friction_rate, float(self.mode)],
        ])


def wind_disturbance(wind_speed, nu, c_d, direction=(1.0, 0.0, 0.0)):
    """Translational drag acceleration ``c_d ∘ (wind − ν)``."""
    if wind_speed < 0:
        raise ValueError("wind speed must be nonnegative")
    direction = np.asarray(direction, dtype=float)
    wind = wind_speed * direction / np.linalg.norm(direction)
    return np.asarray(c_d, dtype=float) * (wind - np.asarray(nu, dtype=float))


# ---------------------------------------------------------------------------
# dynamics
# ---------------------------------------------------------------------------

@njit(cache=True)
def plant_rhs(x, f, tau, m, J, d_a, d_alpha, env):
    """Time derivative of the 13-element state ``[ξ, ν, q, ω]``."""
    dx = np.zeros(13)
    q = x[6:10]
    om = x[10:13]
    mode = int(env[16])

    w = q[0]
    dx[6] = -0.5 * (q[1] * om[0] + q[2] * om[1] + q[3] * om[2])
    dx[7] = 0.5 * (w * om[0] + q[2] * om[2] - q[3] * om[1])
    dx[8] = 0.5 * (w * om[1] + q[3] * om[0] - q[1] * om[2])
    dx[9] = 0.5 * (w * om[2] + q[1] * om[1] - q[2] * om[0])

    Jw = J * om
    gyro = nb_cross(om, Jw)
    dom = (tau - gyro) / J + d_alpha

    if mode == 0:
        dx[0:3] = x[3:6]
        thrust = nb_rotate(q, np.array([0.0, 0.0, f])) / m
        acc = thrust + d_a
        acc[2] -= 9.80665
        inside = True
        for i in range(3):
            if x[i] < env[6 + i] or x[i] > env[9 + i]:
                inside = False
        if inside:
            for i in range(3):
                acc[i] += env[3 + i] * (env[i] - x[3 + i])
        dx[3:6] = acc
    else:
        k_s, c_v, c_f, w_f = env[12], env[13], env[14], env[15]
        if k_s != 0.0 or c_v != 0.0 or c_f != 0.0:
            sgn = 1.0 if w >= 0.0 else -1.0
            vn = np.sqrt(q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
            rotvec = np.zeros(3)
            if vn > 1e-15:
                ang = 2.0 * np.arctan2(vn, sgn * w)
                rotvec = (sgn * ang / vn) * q[1:4]
            tq = -k_s * rotvec - c_v * om - c_f * np.tanh(om / w_f)
            dom += tq / J
        if mode == 2:
            dom[0] = 0.0
            dom[2] = 0.0
    dx[10:13] = dom
    return dx


@njit(cache=True)
def rk4_plant(x, f, tau, m, J, d_a, d_alpha, env, dt, n_steps):
    """Advance the plant ``n_steps`` RK4 steps under a held wrench."""
    for _ in range(n_steps):
        k1 = plant_rhs(x, f, tau, m, J, d_a, d_alpha, env)
        k2 = plant_rhs(x + 0.5 * dt * k1, f, tau, m, J, d_a, d_alpha, env)
        k3 = plant_rhs(x + 0.5 * dt * k2, f, tau, m, J, d_a, d_alpha, env)
        k4 = plant_rhs(x + dt * k3, f, tau, m, J, d_a, d_alpha, env)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        n = np.sqrt(x[6] ** 2 + x[7] ** 2 + x[8] ** 2 + x[9] ** 2)
        x[6:10] = x[6:10] / n
    return x


def state_derivative(state, wrench, dist, params, env=None):
    """Return ``(ξ̇, ν̇, q̇, ω̇)`` as a 13-vector."""
    x = state.as_array() if isinstance(state, VehicleState) else np.asarray(state, dtype=float)
    env = (env or Environment(c_d=np.zeros(3))).pack()
    return plant_rhs(x, float(wrench.f), np.asarray(wrench.tau, float), params.m, params.J,
                     np.asarray(dist.d_a, float), np.asarray(dist.d_alpha, float), env)


# ---------------------------------------------------------------------------
# allocation
# ---------------------------------------------------------------------------

def build_allocation_matrix(params):
    """Map per-rotor thrusts ``u`` to ``[f, τ₁, τ₂, τ₃]`` for the X layout."""
    ls = params.l * np.sin(params.beta)
    lc = params.l * np.cos(params.beta)
    k = params.c_q / params.c_t
    G = np.array([
        [1.0, 1.0, 1.0, 1.0],
        [ls, -ls, -ls, ls],
        [-lc, lc, -lc, lc],
        [-k, -k, k, k],
    ])
    if np.linalg.cond(G) > 1e12:
        raise SingularAllocation("allocation matrix is singular")
    return G


@njit(cache=True)
def nb_allocate(f, tau, G, G_inv, u_max, w_max, c_t):
    wrench = np.empty(4)
    wrench[0] = f
    wrench[1:4] = tau
    u = G_inv @ wrench
    saturated = False
    for i in range(4):
        if u[i] < 0.0:
            u[i] = 0.0
            saturated = True
        elif u[i] > u_max:
            u[i] = u_max
            saturated = True
    npwm = np.sqrt(u / c_t) / w_max
    real = G @ u
    return u, npwm, real[0], real[1:4], saturated


class Allocator:
    """Cached allocation for one parameter set."""

    def __init__(self, params):
        self.params = params
        self.G = build_allocation_matrix(params)
        self.G_inv = np.linalg.inv(self.G)
        self.u_max = params.u_max

    def __call__(self, f, tau):
        return nb_allocate(float(f), np.asarray(tau, float), self.G, self.G_inv, self.u_max,
                           self.params.omega_rotor_max, self.params.c_t)


def allocate(wrench, params):
    alloc = Allocator(params)
    u, npwm, f_real, tau_real, sat = alloc(wrench.f, wrench.tau)
    return MotorCommand(u, npwm, bool(sat), WrenchCommand(float(f_real), tau_real))


def hover_thrust(params):
    return params.m_hat * GRAVITY


def thrust_axis(q):
    return rotate(q, np.array([0.0, 0.0, 1.0]))
