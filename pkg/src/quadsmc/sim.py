"""Fixed-step simulation with dual-rate zero-order-hold control.

Physics runs RK4 at ``dt_physics`` (2 kHz by default); the attitude loop at
500 Hz and the position loop at 250 Hz. Every attitude step is one log row.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .control_qsmc import (ControllerBase, ControllerFailure, attitude_reaching_constants, boundary_layer_threshold,
                           legacy_gain_step, nb_lyapunov, position_reaching_constants)
from .trajectory import rotation_reference_from_euler
from .vehicle import FREE_FLIGHT, Allocator, VehicleParams, rk4_plant

__all__ = ["SimConfig", "NonFinite", "rk4_step", "run_trial", "TrialResult", "LyapunovTrace",
           "legacy_adaptation_step", "CSV_COLUMNS", "write_trial_csv"]


class NonFinite(FloatingPointError):
    pass


@dataclass
class SimConfig:
    dt_physics: float = 5e-4
    attitude_rate: float = 500.0
    position_rate: float = 250.0
    duration: float | None = None  # None: the scenario's own duration
    integrator: str = "rk4"
    mode: int | None = None         # None: the scenario's own mode
    seed: int = 0
    crash_threshold: float = 5.0

    def __post_init__(self):
        if self.integrator != "rk4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")
        if self.dt_physics <= 0 or self.attitude_rate <= 0 or self.position_rate <= 0:
            raise ValueError("rates and step must be positive")
        if self.duration is not None and self.duration <= 0:
            raise ValueError("duration must be positive")
        for rate in (self.attitude_rate, self.position_rate):
            ratio = 1.0 / (self.dt_physics * rate)
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"rate {rate} Hz does not divide the physics rate")
        ratio = self.attitude_rate / self.position_rate
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("position rate must divide the attitude rate")

    @property
    def physics_per_attitude(self):
        return int(round(1.0 / (self.dt_physics * self.attitude_rate)))

    @property
    def attitude_per_position(self):
        return int(round(self.attitude_rate / self.position_rate))


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

def rk4_step(x, rhs, dt, quaternion_slice=None):
    """Classical RK4 step of ``ẋ = rhs(x)``.

    ``quaternion_slice`` (e.g. ``slice(6, 10)``) is renormalised after the
    step. Raises ``NonFinite`` on NaN/Inf output.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(rhs(x), float)
    k2 = np.asarray(rhs(x + 0.5 * dt * k1), float)
    k3 = np.asarray(rhs(x + 0.5 * dt * k2), float)
    k4 = np.asarray(rhs(x + dt * k3), float)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if quaternion_slice is not None:
        out[quaternion_slice] /= np.linalg.norm(out[quaternion_slice])
    if not np.all(np.isfinite(out)):
        raise NonFinite("integration produced a non-finite state")
    return out


def legacy_adaptation_step(k, s, gamma, dt):
    """``k' = k + γ|s| dt`` (monotone, unbounded under persistent |s| > 0)."""
    return legacy_gain_step(k, s, gamma, dt)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

CSV_COLUMNS = (["t"] + [f"xi_{i}" for i in range(3)] + [f"nu_{i}" for i in range(3)] + [f"q_{c}" for c in "wxyz"]
               + [f"omega_{i}" for i in range(3)] + [f"xi_d_{i}" for i in range(3)] + [f"nu_d_{i}" for i in range(3)]
               + [f"q_d_{c}" for c in "wxyz"] + [f"omega_d_{i}" for i in range(3)] + [f"q_e_{c}" for c in "wxyz"]
               + [f"s_q_{i}" for i in range(3)] + [f"s_xi_{i}" for i in range(3)] + ["f"]
               + [f"tau_{i}" for i in range(3)] + [f"npwm_{i}" for i in range(4)] + [f"K_q_{i}" for i in range(3)]
               + [f"K_xi_{i}" for i in range(3)] + ["V_q", "V_xi", "V_2", "flags"])

FLAG_SATURATED = 1
FLAG_OUTSIDE_LAYER = 2   # every |s_q,i| ≥ s*_i
FLAG_FAILURE = 4


@dataclass
class LyapunovTrace:
    t: np.ndarray
    V_q: np.ndarray
    V_xi: np.ndarray
    V_1: np.ndarray
    V_2: np.ndarray
    s_q: np.ndarray
    s_xi: np.ndarray
    outside_layer: np.ndarray  # (n, 3) booleans |s_q,i| ≥ s*_i
    r: np.ndarray | None = None
    s_star: np.ndarray | None = None
    constants: dict = field(default_factory=dict)

    def increases_outside_layer(self, rtol=1e-12):
        """Indices of steps where V_q rose although every axis was outside the layer."""
        dV = np.diff(self.V_q)
        prev_out = np.all(self.outside_layer[:-1], axis=1)
        tol = rtol * np.maximum(self.V_q[:-1], 1e-300)
        return np.nonzero(prev_out & (dV > tol))[0]


@dataclass
class TrialResult:
    scenario: str
    controller: str
    t: np.ndarray
    state: np.ndarray        # (n, 13)
    reference: np.ndarray    # (n, 13): ξ_d, ν_d, q_d, ω_d
    q_e: np.ndarray
    s_q: np.ndarray
    s_xi: np.ndarray
    f: np.ndarray
    tau: np.ndarray
    npwm: np.ndarray
    K_q: np.ndarray
    K_xi: np.ndarray
    V_q: np.ndarray
    V_xi: np.ndarray
    V_2: np.ndarray
    flags: np.ndarray
    psi_d: np.ndarray
    success: bool
    failure_kind: str = ""
    failure_message: str = ""
    saturation_count: int = 0
    lyapunov: LyapunovTrace | None = None
    metrics: object = None

    @property
    def verdict(self):
        return "success" if self.success else "unstable"

    @property
    def xi_error(self):
        return self.state[:, 0:3] - self.reference[:, 0:3]

    def total_rotation(self):
        """``∫‖ω‖dt`` by the rectangle rule on the held samples."""
        dt = np.diff(self.t)
        return float(np.sum(np.linalg.norm(self.state[:-1, 10:13], axis=1) * dt))

    def recovery_time(self, target=None, pos_tol=0.1, vel_tol=0.2):
        """First time after which the vehicle stays within tolerance of the target; ``None`` if never."""
        target = self.reference[:, 0:3] if target is None else np.asarray(target, float)
        ok = (np.linalg.norm(self.state[:, 0:3] - target, axis=-1) < pos_tol) & \
             (np.linalg.norm(self.state[:, 3:6], axis=1) < vel_tol)
        if not self.success or ok.size == 0 or not ok[-1]:
            return None
        bad = np.nonzero(~ok)[0]
        return float(self.t[0] if bad.size == 0 else self.t[bad[-1] + 1])

    def table(self):
        cols = [self.t[:, None], self.state, self.reference, self.q_e, self.s_q, self.s_xi, self.f[:, None],
                self.tau, self.npwm, self.K_q, self.K_xi, self.V_q[:, None], self.V_xi[:, None],
                self.V_2[:, None], self.flags[:, None].astype(float)]
        return np.hstack(cols)


def write_trial_csv(result: TrialResult, path_or_buffer):
    """Write the fixed-schema trial CSV with 17 significant digits."""
    data = result.table()
    own = isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__")
    fh = open(path_or_buffer, "w", newline="") if own else path_or_buffer
    try:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        fmt = ",".join(["%.17g"] * (data.shape[1] - 1) + ["%d"])
        buf = io.StringIO()
        np.savetxt(buf, data, fmt=fmt, delimiter=",")
        fh.write(buf.getvalue())
    finally:
        if own:
            fh.close()


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------

def _zero_disturbance(t):
    return None


def run_trial(scenario, controller: ControllerBase, config: SimConfig | None = None, compute_metrics=True):
    """Simulate one scenario with one controller instance; never raises on trial failure."""
    cfg = config or SimConfig()
    params: VehicleParams = scenario.params
    mode = scenario.mode if cfg.mode is None else cfg.mode
    duration = scenario.duration if cfg.duration is None else cfg.duration
    env = scenario.environment(mode).pack()
    att_dt = 1.0 / cfg.attitude_rate
    n_sub = cfg.physics_per_attitude
    n_pos = cfg.attitude_per_position
    n_steps = int(round(duration * cfg.attitude_rate))
    alloc = Allocator(params)
    free = mode == FREE_FLIGHT
    if not free:
        controller.fixed_thrust = scenario.gimbal_thrust(params)

    t_grid = np.arange(n_steps + 1) * att_dt
    refs = None
    if free:
        if scenario.trajectory is None:
            raise ValueError("free-flight scenario needs a position trajectory")
        refs = scenario.trajectory.sample(t_grid)
    euler_refs = scenario.attitude_reference(t_grid) if scenario.attitude_reference is not None else None

    n = n_steps + 1
    state = np.empty((n, 13))
    reference = np.zeros((n, 13))
    q_e = np.empty((n, 4))
    s_q = np.empty((n, 3))
    s_xi = np.empty((n, 3))
    f_log = np.empty(n)
    tau_log = np.empty((n, 3))
    npwm = np.empty((n, 4))
    K_q = np.empty((n, 3))
    K_xi = np.empty((n, 3))
    V = np.empty((n, 3))
    flags = np.zeros(n, dtype=np.int64)
    psi_d = np.zeros(n)

    x = scenario.initial.as_array().copy()
    if not free:
        x[0:6] = 0.0
    d_a = np.zeros(3)
    d_alpha = np.zeros(3)
    disturbance = scenario.disturbance or _zero_disturbance

    s_star = scenario.s_star
    adapt_q = getattr(controller, "adapt_q", None)
    adapt_xi = getattr(controller, "adapt_xi", None)
    success, kind, message = True, "", ""
    sat_count = 0
    last = n_steps
    for k in range(n):
        t = t_grid[k]
        try:
            if free:
                ref = refs[k]
                if k % n_pos == 0:
                    controller.position_step(x, ref)
                reference[k, 0:6] = ref[0:6]
                psi_d[k] = ref[15]
            else:
                er = euler_refs
                eta_d, eta_dot_d, eta_ddot_d = er.eta_d[k], er.eta_dot_d[k], er.eta_ddot_d[k]
                if controller.name == "esmc":
                    controller.set_euler_reference(eta_d, eta_dot_d, eta_ddot_d)
                else:
                    controller.set_attitude_reference(*rotation_reference_from_euler(eta_d, eta_dot_d, eta_ddot_d))
                psi_d[k] = eta_d[2]
            f_cmd, tau_cmd = controller.attitude_step(x, att_dt)
        except ControllerFailure as exc:
            success, kind, message, last = False, exc.kind, str(exc), k - 1
            break
        u, pw, f_real, tau_real, sat = alloc(f_cmd, tau_cmd)
        controller.f_applied = f_real
        sat_count += int(sat)

        state[k] = x
        reference[k, 6:10] = controller.q_d
        reference[k, 10:13] = controller.omega_d
        q_e[k] = controller.q_e
        s_q[k] = controller.s_q
        s_xi[k] = controller.s_xi
        f_log[k] = f_real
        tau_log[k] = tau_real
        npwm[k] = pw
        Kq, Kx = controller.gains_snapshot()
        K_q[k] = Kq
        K_xi[k] = Kx
        if adapt_q is not None:
            gq, kq_star = adapt_q.Gamma, adapt_q.K_th
            gx, kx_star = (adapt_xi.Gamma, adapt_xi.K_th) if adapt_xi is not None else (gq, Kx)
            V[k] = nb_lyapunov(controller.s_q, controller.s_xi, params.J, Kq, kq_star, gq, Kx, kx_star, gx)
        else:
            V[k] = nb_lyapunov(controller.s_q, controller.s_xi, params.J, Kq, Kq, np.ones(3), Kx, Kx, np.ones(3))
        flag = FLAG_SATURATED if sat else 0
        if s_star is not None and np.all(np.abs(controller.s_q) >= s_star):
            flag |= FLAG_OUTSIDE_LAYER
        flags[k] = flag
        if k == n_steps:
            break

        controller.adapt(att_dt)
        dist = disturbance(t)
        if dist is not None:
            d_a, d_alpha = np.asarray(dist[0], float), np.asarray(dist[1], float)
        x = rk4_plant(x, f_real, tau_real, params.m, params.J, d_a, d_alpha, env, cfg.dt_physics, n_sub)
        if not np.all(np.isfinite(x)):
            success, kind, message, last = False, "non_finite", f"non-finite state at t={t + att_dt:.4f}", k
            break
        if free:
            err = np.linalg.norm(x[0:3] - refs[k + 1, 0:3])
            if err > cfg.crash_threshold:
                success, kind, message, last = False, "crash", f"position error {err:.2f} m at t={t + att_dt:.4f}", k
                break

    m = last + 1
    if not success and m > 0:
        flags[m - 1] |= FLAG_FAILURE
    V = V[:m]
    result = TrialResult(
        scenario=scenario.name, controller=controller.name, t=t_grid[:m], state=state[:m],
        reference=reference[:m], q_e=q_e[:m], s_q=s_q[:m], s_xi=s_xi[:m], f=f_log[:m], tau=tau_log[:m],
        npwm=npwm[:m], K_q=K_q[:m], K_xi=K_xi[:m], V_q=V[:, 0], V_xi=V[:, 1], V_2=V[:, 2], flags=flags[:m],
        psi_d=psi_d[:m], success=success, failure_kind=kind, failure_message=message, saturation_count=sat_count)
    result.lyapunov = _lyapunov_trace(result, scenario)
    if compute_metrics and m > 0:
        from .metrics import compute_metrics as _metrics
        result.metrics = _metrics(result)
    return result


def _lyapunov_trace(res: TrialResult, scenario):
    s_star = scenario.s_star
    outside = np.abs(res.s_q) >= (s_star if s_star is not None else np.inf)
    trace = LyapunovTrace(res.t, res.V_q, res.V_xi, res.V_q + res.V_xi, res.V_2, res.s_q, res.s_xi, outside)
    b = scenario.lyapunov_bounds
    if b is not None:
        Dq, pi_q, phi_q = b["attitude"]
        r, s_st = boundary_layer_threshold(Dq, pi_q, phi_q)
        trace.r, trace.s_star = r, s_st
        c1, c2 = attitude_reaching_constants(Dq, pi_q, phi_q, scenario.params.J)
        trace.constants.update(c1=c1, c2=c2)
        if "position" in b:
            c3, c4 = position_reaching_constants(*b["position"])
            c5 = min(c1, c3)
            trace.constants.update(c3=c3, c4=c4, c5=c5, c6=c2 + c4)
    return trace
