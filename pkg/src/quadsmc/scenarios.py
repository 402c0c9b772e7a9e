"""Scenario definitions and the controller factory used by the harness and CLI."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import benchmarks as bm
from . import control_qsmc as cq
from .math3d import UnitQuaternion, axis_angle_quaternion
from .trajectory import (THROW_TARGET, AttitudeOnlyReference, Hover, Lemniscate, LemniscateConfig,
                         PositionTrajectory, gimbal_sinusoid, throw_launch_initial)
from .vehicle import FREE_FLIGHT, GIMBAL, GIMBAL_SINGLE_AXIS, GRAVITY, Environment, VehicleParams, VehicleState

CONTROLLERS = ("qsmc", "aqsmc", "esmc", "gtc", "qpd")

# Unmodelled support moments of the gimbal rig (spring toward level, viscous
# and Coulomb-like friction). Scaled so that ESMC with its first-scenario gains
# shows the reported q_e RMS of about 0.074 on the 0.2 rad sinusoid.
GIMBAL_SPRING = 8.0e-4      # N·m/rad
GIMBAL_DAMPING = 1.6e-5     # N·m·s/rad
GIMBAL_FRICTION = 1.6e-4    # N·m

WIND_LEVELS = (0.0, 1.9, 3.8)   # m/s
WIND_DRAG = 0.4                 # 1/s
WIND_GATE_LO = np.array([0.0, -np.inf, -np.inf])
WIND_GATE_HI = np.array([np.inf, np.inf, np.inf])


@dataclass
class Scenario:
    name: str
    kind: str                       # hover | gimbal1 | gimbal2 | gimbal_step | lemniscate | throw | attitude
    mode: int
    duration: float
    initial: VehicleState
    params: VehicleParams = field(default_factory=VehicleParams)
    trajectory: PositionTrajectory | None = None
    attitude_reference: Callable | None = None    # t-array -> AttitudeOnlyReference
    env: Environment = field(default_factory=lambda: Environment(c_d=np.zeros(3)))
    disturbance: Callable | None = None            # t -> (d_a, d_alpha) or None
    thrust_in_gimbal: float | None = None          # N; default hover thrust
    s_star: np.ndarray | None = None
    lyapunov_bounds: dict | None = None
    target: np.ndarray | None = None

    def environment(self, mode):
        return replace(self.env, mode=mode)

    def gimbal_thrust(self, params):
        return params.m_hat * GRAVITY if self.thrust_in_gimbal is None else self.thrust_in_gimbal


def _constant_euler(eta):
    eta = np.asarray(eta, float)

    def ref(t):
        t = np.asarray(t, float)
        z = np.zeros(t.shape + (3,))
        return AttitudeOnlyReference(z + eta, z.copy(), z.copy())
    return ref


def gimbal_environment(single_axis=False, scale=1.0):
    return Environment(c_d=np.zeros(3), gimbal_spring=GIMBAL_SPRING * scale, gimbal_damping=GIMBAL_DAMPING * scale,
                       gimbal_friction=GIMBAL_FRICTION * scale, mode=GIMBAL_SINGLE_AXIS if single_axis else GIMBAL)


def hover_scenario(duration=5.0, offset=(0.01, -0.01, 0.01), params=None):
    target = np.array([0.0, 0.0, 1.0])
    init = VehicleState(target + np.asarray(offset, float), np.zeros(3), UnitQuaternion.identity(), np.zeros(3))
    return Scenario("hover", "hover", FREE_FLIGHT, duration, init, params or VehicleParams(),
                    trajectory=Hover(target), target=target)


def gimbal_scenario(amplitude, name=None, duration=30.0, hold=10.0, env=None, params=None):
    kind = "gimbal1" if amplitude <= 0.3 else "gimbal2"
    return Scenario(name or kind, kind, GIMBAL, duration, VehicleState(), params or VehicleParams(),
                    attitude_reference=lambda t: gimbal_sinusoid(amplitude, t, hold=hold),
                    env=env if env is not None else gimbal_environment())


def gimbal_step_scenario(magnitude=450.0, onset=7.0, removal=17.0, duration=25.0, params=None, env=None):
    """Single-axis rig holding level pitch while a pitch-acceleration step acts on ``[onset, removal)``.

    The default step (rad/s²) is severe enough to push ``|s|`` past ``εφ``
    with the tabulated gains, so the adaptive gain has something to do.
    """

    def dist(t):
        on = onset <= t < removal
        return np.zeros(3), np.array([0.0, magnitude if on else 0.0, 0.0])

    return Scenario("gimbal_step", "gimbal_step", GIMBAL_SINGLE_AXIS, duration, VehicleState(),
                    params or VehicleParams(), attitude_reference=_constant_euler(np.zeros(3)),
                    env=env if env is not None else gimbal_environment(single_axis=True), disturbance=dist)


def lemniscate_scenario(wind=0.0, cfg: LemniscateConfig | None = None, params=None, drag=WIND_DRAG,
                        gate_lo=WIND_GATE_LO, gate_hi=WIND_GATE_HI):
    traj = Lemniscate(cfg)
    start = traj(0.0)
    init = VehicleState(start.xi_d.copy(), np.zeros(3), UnitQuaternion.identity(), np.zeros(3))
    env = Environment(wind=np.array([wind, 0.0, 0.0]), c_d=np.full(3, drag), gate_lo=np.asarray(gate_lo, float),
                      gate_hi=np.asarray(gate_hi, float))
    return Scenario(f"lemniscate_w{wind:g}", "lemniscate", FREE_FLIGHT, traj.duration, init,
                    params or VehicleParams(), trajectory=traj, env=env)


def throw_scenario(seed, duration=8.0, params=None, **kw):
    init = throw_launch_initial(seed, **kw)
    return Scenario(f"throw_{seed}", "throw", FREE_FLIGHT, duration, init, params or VehicleParams(),
                    trajectory=Hover(THROW_TARGET), target=THROW_TARGET.copy())


def attitude_regulation_scenario(q0, omega0=(0.0, 0.0, 0.0), duration=5.0, params=None, disturbance=None,
                                 name="attitude", env=None):
    """Attitude-only regulation to level, with no support moments unless ``env`` says so."""
    init = VehicleState(np.zeros(3), np.zeros(3), UnitQuaternion.from_array(q0), np.asarray(omega0, float))
    return Scenario(name, "attitude", GIMBAL, duration, init, params or VehicleParams(),
                    attitude_reference=_constant_euler(np.zeros(3)),
                    env=env if env is not None else Environment(c_d=np.zeros(3), mode=GIMBAL),
                    disturbance=disturbance)


def unwinding_scenario(angle_deg=179.0, axis=(1.0, 1.0, 0.0), far_hemisphere=True, duration=6.0):
    """Attitude whose quaternion sits ``angle_deg`` from the identity on S³.

    ``far_hemisphere`` picks the representative with a negative scalar part
    (the antipode of the short one); otherwise the scalar part is made
    non-negative. At 179° the physical rotation is only 2°.
    """
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    half = np.deg2rad(angle_deg)
    q = np.concatenate([[np.cos(half)], np.sin(half) * axis])
    if (q[0] < 0) != far_hemisphere:
        q = -q
    return attitude_regulation_scenario(q, duration=duration, name=f"unwinding_{angle_deg:g}")


def lyapunov_scenario(d_bar=20.0, pi_accel=30.0, phi=0.5, tilt_deg=60.0, omega0=(4.0, -3.0, 2.0),
                      duration=1.0, params=None, frequency=(3.0, 5.0, 7.0)):
    """Attitude regulation with a bounded sinusoidal disturbance and gains from the robustness condition.

    ``d_bar`` and ``pi_accel`` are per-axis angular-acceleration levels.
    """
    params = params or VehicleParams()
    J = params.J_hat
    bounds = cq.UncertaintyBounds(d_alpha_bar=np.full(3, d_bar) * J)
    pi = np.full(3, pi_accel) * J
    K = cq.gain_condition(bounds, pi, J_hat=J)
    freq = np.asarray(frequency, float)

    def dist(t):
        return np.zeros(3), d_bar * np.sin(2.0 * np.pi * freq * t + np.array([0.3, 1.1, 2.0]))

    q0 = axis_angle_quaternion(np.array([1.0, 0.5, -0.3]), np.deg2rad(tilt_deg))
    sc = attitude_regulation_scenario(q0, omega0, duration=duration, params=params, disturbance=dist,
                                      name="lyapunov")
    Delta = bounds.delta_q_bar + bounds.d_alpha_bar
    _, s_star = cq.boundary_layer_threshold(Delta, pi, np.full(3, phi))
    sc.s_star = s_star
    sc.lyapunov_bounds = {"attitude": (Delta, pi, np.full(3, phi)), "K_q": K}
    return sc


# ---------------------------------------------------------------------------
# controller factory
# ---------------------------------------------------------------------------

def default_gains(controller, kind):
    """Tabulated gains for ``controller`` in scenario ``kind`` (``dict`` of gain objects)."""
    gimbal_like = kind in ("gimbal1", "gimbal_step", "attitude")
    if controller in ("qsmc", "aqsmc"):
        if kind == "gimbal2":
            return {"attitude": cq.gimbal2_qsmc_gains()}
        if gimbal_like:
            return {"attitude": cq.gimbal1_qsmc_gains()}
        att, pos = cq.lemniscate_qsmc_gains()
        return {"attitude": att, "position": pos}
    if controller == "esmc":
        # no second-scenario set is tabulated; the first one is reused
        return {"esmc": bm.gimbal1_esmc_gains() if kind in ("gimbal1", "gimbal2", "gimbal_step", "attitude")
                else bm.lemniscate_esmc_gains()}
    if controller == "gtc":
        if kind == "gimbal2":
            return {"gtc": bm.gimbal2_gtc_gains()}
        return {"gtc": bm.gimbal1_gtc_gains() if gimbal_like else bm.lemniscate_gtc_gains()}
    if controller == "qpd":
        if kind == "gimbal2":
            return {"qpd": bm.gimbal2_qpd_gains()}
        return {"qpd": bm.gimbal1_qpd_gains() if gimbal_like else bm.lemniscate_qpd_gains()}
    raise ValueError(f"unknown controller {controller!r}; choose from {CONTROLLERS}")


def scenario_gains(controller, scenario: Scenario):
    """Default gains for a concrete scenario; the Lyapunov check takes ``K_q`` and ``φ_q`` from its bounds."""
    g = default_gains(controller, scenario.kind)
    if scenario.lyapunov_bounds is not None and "attitude" in g:
        _, _, phi = scenario.lyapunov_bounds["attitude"]
        g = dict(g, attitude=replace(g["attitude"], K_q=np.array(scenario.lyapunov_bounds["K_q"]), phi_q=phi))
    return g


def build_controller(controller, scenario: Scenario, gains=None, params=None, **options):
    """Instantiate a controller for a scenario.

    ``options`` pass through: ``sign_aware`` (QSMC/AQSMC), ``law``,
    ``adapt_q``, ``adapt_xi``, ``K_q0``, ``K_xi0`` (AQSMC).
    """
    params = params or scenario.params
    g = gains if gains is not None else scenario_gains(controller, scenario)
    if controller == "qsmc":
        return cq.QSMCController(params, g["attitude"], g.get("position"), sign_aware=options.get("sign_aware", True))
    if controller == "aqsmc":
        return cq.AQSMCController(params, g["attitude"], g.get("position"), adapt_q=options.get("adapt_q"),
                                  adapt_xi=options.get("adapt_xi"), K_q0=options.get("K_q0"),
                                  K_xi0=options.get("K_xi0"), law=options.get("law", "bounded"),
                                  sign_aware=options.get("sign_aware", True))
    if controller == "esmc":
        return bm.ESMCController(params, g["esmc"])
    if controller == "gtc":
        return bm.GTCController(params, g["gtc"])
    if controller == "qpd":
        gains_qpd = g["qpd"]
        if gains_qpd.position is None and scenario.mode == FREE_FLIGHT:
            gains_qpd = bm.QPDGains(gains_qpd.K_P, gains_qpd.K_D, cq.lemniscate_qsmc_gains()[1])
        return bm.QPDController(params, gains_qpd)
    raise ValueError(f"unknown controller {controller!r}; choose from {CONTROLLERS}")


def scenario_by_name(name, wind=None, seed=0, **kw):
    """Resolve a CLI scenario id."""
    if name == "hover":
        return hover_scenario(**kw)
    if name == "gimbal1":
        return gimbal_scenario(0.2, **kw)
    if name == "gimbal2":
        return gimbal_scenario(0.5, **kw)
    if name == "gimbal_step":
        return gimbal_step_scenario(**kw)
    if name == "lemniscate":
        return lemniscate_scenario(wind=WIND_LEVELS[-1] if wind is None else wind, **kw)
    if name == "throw":
        return throw_scenario(seed, **kw)
    if name == "unwinding":
        return unwinding_scenario(**kw)
    if name == "lyapunov":
        return lyapunov_scenario(**kw)
    raise ValueError(f"unknown scenario {name!r}")


SCENARIOS = ("hover", "gimbal1", "gimbal2", "gimbal_step", "lemniscate", "throw", "unwinding", "lyapunov")
