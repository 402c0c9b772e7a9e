"""Desired trajectories: gimbal attitude sinusoids, a C⁴ figure-eight with a
dive, hover setpoints, externally planned trajectories and throw-launch
initial conditions.

Position trajectories expose ``sample(t)`` returning an ``(n, 18)`` array with
columns ``ξ_d, ξ̇_d, ξ̈_d, ξ_d⁽³⁾, ξ_d⁽⁴⁾, ψ_d, ψ̇_d, ψ̈_d``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .math3d import UnitQuaternion, rotate
from .vehicle import VehicleState

REF_WIDTH = 18


@dataclass(frozen=True)
class ReferenceSample:
    xi_d: np.ndarray
    xi_dot_d: np.ndarray
    xi_ddot_d: np.ndarray
    xi_d3: np.ndarray
    xi_d4: np.ndarray
    psi_d: float = 0.0
    psi_dot_d: float = 0.0
    psi_ddot_d: float = 0.0

    @classmethod
    def from_row(cls, row):
        row = np.asarray(row, float)
        return cls(row[0:3], row[3:6], row[6:9], row[9:12], row[12:15], row[15], row[16], row[17])

    def as_row(self):
        return np.concatenate([self.xi_d, self.xi_dot_d, self.xi_ddot_d, self.xi_d3, self.xi_d4,
                               [self.psi_d, self.psi_dot_d, self.psi_ddot_d]])


@dataclass(frozen=True)
class AttitudeOnlyReference:
    eta_d: np.ndarray
    eta_dot_d: np.ndarray
    eta_ddot_d: np.ndarray


class PositionTrajectory:
    """Base class; subclasses implement ``sample``."""

    duration: float = np.inf

    def sample(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return ReferenceSample.from_row(self.sample(np.array([float(t)]))[0])

    def bounds(self, n=20001):
        """Sup-norm of each derivative order (and ψ derivatives) on a dense grid."""
        end = self.duration if np.isfinite(self.duration) else 10.0
        rows = self.sample(np.linspace(0.0, end, n))
        xi_b = [float(np.max(np.linalg.norm(rows[:, 3 * i:3 * i + 3], axis=1))) for i in range(5)]
        psi_b = [float(np.max(np.abs(rows[:, 15 + i]))) for i in range(3)]
        return xi_b, psi_b

    def declared_bounds(self, margin=1.1, n=2001):
        """Declared bound constants ``(B_ξ, B_ψ)``: a coarse-grid sup inflated by ``margin``.

        A zero sup (e.g. constant yaw) is declared as 0; the dense-grid audit
        checks the declaration holds between the coarse samples.
        """
        xi_b, psi_b = self.bounds(n)
        return [margin * b for b in xi_b], [margin * b for b in psi_b]


@dataclass
class Hover(PositionTrajectory):
    setpoint: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    psi: float = 0.0
    duration: float = np.inf

    def sample(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        out = np.zeros((t.size, REF_WIDTH))
        out[:, 0:3] = self.setpoint
        out[:, 15] = self.psi
        return out


def _smoothstep7(u):
    """C³ ramp and its integral and derivatives, for u in [0, 1]."""
    u = np.clip(u, 0.0, 1.0)
    s = 35 * u**4 - 84 * u**5 + 70 * u**6 - 20 * u**7
    si = 7 * u**5 - 14 * u**6 + 10 * u**7 - 2.5 * u**8
    s1 = 140 * u**3 - 420 * u**4 + 420 * u**5 - 140 * u**6
    s2 = 420 * u**2 - 1680 * u**3 + 2100 * u**4 - 840 * u**5
    s3 = 840 * u - 5040 * u**2 + 8400 * u**3 - 4200 * u**4
    return si, s, s1, s2, s3


@dataclass
class LemniscateConfig:
    center: tuple = (0.0, 0.0, 1.0)
    amplitude_x: float = 2.0
    amplitude_y: float = 2.0
    loops: int = 2
    t_start: float = 1.0
    ramp: float = 3.0
    t_end: float = 38.0
    duration: float = 40.0
    dive_depth: float = 0.5
    dive_time: float | None = None       # centre of the dive; default: quarter of the first loop
    dive_width: float | None = None      # None: calibrate to peak_accel
    peak_accel: float = 5.84
    psi: float = 0.0


class Lemniscate(PositionTrajectory):
    """Smoothly ramped Gerono figure-eight with a superposed dive.

    The horizontal path is ``x = A_x sin θ``, ``y = A_y sin θ cos θ`` where the
    phase ``θ(t)`` ramps its rate up and down with a C³ smoothstep, so the
    path is C⁴ and starts and ends at rest. The dive is a ``sin⁶`` bump in
    altitude whose width is calibrated so the peak acceleration matches the
    configured value.
    """

    def __init__(self, cfg: LemniscateConfig | None = None):
        self.cfg = cfg or LemniscateConfig()
        c = self.cfg
        plateau = c.t_end - c.t_start - 2.0 * c.ramp
        if plateau < 0:
            raise ValueError("ramps longer than the trajectory")
        self.rate = 2.0 * np.pi * c.loops / (plateau + c.ramp)
        self.duration = c.duration
        self.dive_time = c.dive_time
        if self.dive_time is None:
            self.dive_time = brentq(lambda t: self._phase(np.array([t]))[0][0] - 0.5 * np.pi, c.t_start, c.t_end)
        self.dive_width = c.dive_width
        if self.dive_width is None:
            self.dive_width = self._calibrate_dive(c.peak_accel)

    def _phase(self, t):
        """θ and its first four derivatives."""
        c = self.cfg
        t = np.asarray(t, float)
        ua = (t - c.t_start) / c.ramp
        ub = (t - (c.t_end - c.ramp)) / c.ramp
        ia, sa, sa1, sa2, sa3 = _smoothstep7(ua)
        ib, sb, sb1, sb2, sb3 = _smoothstep7(ub)
        T = c.ramp
        # rate window w = S(ua) − S(ub); θ = rate ∫ w.
        # ∫ S(ua) dt over [t_start, t] = T·I(ua) for ua ≤ 1, then linear growth
        lin_a = np.clip(t - (c.t_start + T), 0.0, None)
        int_a = T * ia + lin_a
        lin_b = np.clip(t - c.t_end, 0.0, None)
        int_b = T * ib + lin_b
        integral = int_a - int_b
        w = sa - sb
        w1 = (sa1 * (ua > 0) * (ua < 1) - sb1 * (ub > 0) * (ub < 1)) / T
        w2 = (sa2 * (ua > 0) * (ua < 1) - sb2 * (ub > 0) * (ub < 1)) / T**2
        w3 = (sa3 * (ua > 0) * (ua < 1) - sb3 * (ub > 0) * (ub < 1)) / T**3
        r = self.rate
        return r * integral, r * w, r * w1, r * w2, r * w3

    def _dive(self, t, width=None):
        """Altitude offset and derivatives to 4th order."""
        width = self.dive_width if width is None else width
        t = np.asarray(t, float)
        u = (t - self.dive_time) / width + 0.5
        inside = (u > 0.0) & (u < 1.0)
        wb = np.pi / width
        x = np.pi * u
        # sin⁶x = (10 − 15 cos2x + 6 cos4x − cos6x)/32
        coeffs = ((2, -15.0), (4, 6.0), (6, -1.0))
        out = []
        for k in range(5):
            val = np.full_like(t, 10.0 if k == 0 else 0.0)
            for n, a in coeffs:
                val = val + a * (n * wb) ** k * np.cos(n * x + 0.5 * k * np.pi)
            out.append(-self.cfg.dive_depth * np.where(inside, val / 32.0, 0.0))
        return out

    def _horizontal_peak(self):
        t = np.linspace(0.0, self.cfg.duration, 20001)
        rows = self._sample(t, width=1.0, with_dive=False)
        return float(np.max(np.linalg.norm(rows[:, 6:9], axis=1)))

    def _peak_with_width(self, width):
        t = np.linspace(self.dive_time - 0.5 * width, self.dive_time + 0.5 * width, 4001)
        rows = self._sample(t, width=width)
        return float(np.max(np.linalg.norm(rows[:, 6:9], axis=1)))

    def _calibrate_dive(self, target):
        if self._horizontal_peak() >= target:
            raise ValueError("horizontal motion alone exceeds the requested peak acceleration")
        return brentq(lambda w: self._peak_with_width(w) - target, 0.2, 20.0, xtol=1e-10)

    def _sample(self, t, width=None, with_dive=True):
        c = self.cfg
        t = np.atleast_1d(np.asarray(t, float))
        th, th1, th2, th3, th4 = self._phase(t)
        s, co = np.sin(th), np.cos(th)
        # derivatives of sin(θ) and of ½ sin(2θ) w.r.t. θ
        gx = [s, co, -s, -co, s]
        s2, c2 = np.sin(2 * th), np.cos(2 * th)
        gy = [0.5 * s2, c2, -2 * s2, -4 * c2, 8 * s2]

        def chain(g):
            d0 = g[0]
            d1 = g[1] * th1
            d2 = g[2] * th1**2 + g[1] * th2
            d3 = g[3] * th1**3 + 3 * g[2] * th1 * th2 + g[1] * th3
            d4 = g[4] * th1**4 + 6 * g[3] * th1**2 * th2 + g[2] * (3 * th2**2 + 4 * th1 * th3) + g[1] * th4
            return [d0, d1, d2, d3, d4]

        x = chain(gx)
        y = chain(gy)
        z = self._dive(t, width) if with_dive else [np.zeros_like(t)] * 5
        out = np.zeros((t.size, REF_WIDTH))
        for k in range(5):
            out[:, 3 * k] = c.amplitude_x * x[k]
            out[:, 3 * k + 1] = c.amplitude_y * y[k]
            out[:, 3 * k + 2] = z[k]
        out[:, 0:3] += np.asarray(c.center, float)
        out[:, 15] = c.psi
        return out

    def sample(self, t):
        return self._sample(t)

    def loop_end_times(self):
        c = self.cfg
        return [brentq(lambda t: self._phase(np.array([t]))[0][0] - 2 * np.pi * k, c.t_start, c.t_end)
                for k in range(1, c.loops + 1)]


class PolynomialTrajectory(PositionTrajectory):
    """Piecewise-polynomial position trajectory.

    ``coeffs`` has shape ``(n_segments, 3, degree + 1)`` in increasing power
    of local time; ``times`` holds the ``n_segments + 1`` breakpoints.
    """

    def __init__(self, times, coeffs, psi=0.0):
        self.times = np.asarray(times, float)
        self.coeffs = np.asarray(coeffs, float)
        if self.coeffs.shape[0] != self.times.size - 1:
            raise ValueError("need one coefficient block per segment")
        self.psi = psi
        self.duration = float(self.times[-1])

    def sample(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.coeffs.shape[0] - 1)
        tau = np.clip(t - self.times[idx], 0.0, None)
        out = np.zeros((t.size, REF_WIDTH))
        for axis in range(3):
            for k in range(5):
                for j in range(t.size):
                    p = np.polynomial.Polynomial(self.coeffs[idx[j], axis]).deriv(k) if k else \
                        np.polynomial.Polynomial(self.coeffs[idx[j], axis])
                    out[j, 3 * k + axis] = p(tau[j])
        out[:, 15] = self.psi
        return out


class SampledTrajectory(PositionTrajectory):
    """Trajectory given as samples of ξ_d and its derivatives (linear interpolation)."""

    def __init__(self, t, rows):
        self.t = np.asarray(t, float)
        self.rows = np.asarray(rows, float)
        self.duration = float(self.t[-1])

    def sample(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        return np.stack([np.interp(t, self.t, self.rows[:, j]) for j in range(REF_WIDTH)], axis=1)


def check_smoothness(t, rows, rel_tol=0.05):
    """Each derivative column must match the difference quotient of the column below it."""
    t = np.asarray(t, float)
    dt = np.diff(t)
    worst = 0.0
    for k in range(4):
        lo = rows[:, 3 * k:3 * k + 3]
        hi = rows[:, 3 * k + 3:3 * k + 6]
        quotient = np.diff(lo, axis=0) / dt[:, None]
        mid = 0.5 * (hi[1:] + hi[:-1])
        scale = max(np.max(np.abs(hi)), 1e-9)
        worst = max(worst, float(np.max(np.abs(quotient - mid))) / scale)
    if worst > rel_tol:
        raise ValueError(f"trajectory file is not smooth to 4th order (relative mismatch {worst:.3g})")
    return worst


def load_trajectory_csv(path):
    """Load ``t, ξ_d[3], ξ̇_d[3], ..., ξ_d⁽⁴⁾[3], ψ_d, ψ̇_d, ψ̈_d`` rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row])
    if len(header) != REF_WIDTH + 1 or data.shape[1] != REF_WIDTH + 1:
        raise ValueError(f"expected {REF_WIDTH + 1} columns, got {data.shape[1]}")
    check_smoothness(data[:, 0], data[:, 1:])
    return SampledTrajectory(data[:, 0], data[:, 1:])


# ---------------------------------------------------------------------------
# attitude-only references
# ---------------------------------------------------------------------------

def gimbal_sinusoid(amplitude, t, hold=10.0, frequency=0.1):
    """``η_d = A [sin(2πf τ), cos(2πf τ), 0]`` with τ = t − hold; zero during the hold."""
    t = np.asarray(t, float)
    tau = t - hold
    active = tau >= 0.0
    w = 2.0 * np.pi * frequency
    s, c = np.sin(w * tau), np.cos(w * tau)
    zero = np.zeros_like(t)
    eta = np.stack([amplitude * s, amplitude * c, zero], axis=-1)
    eta_dot = np.stack([amplitude * w * c, -amplitude * w * s, zero], axis=-1)
    eta_ddot = np.stack([-amplitude * w * w * s, -amplitude * w * w * c, zero], axis=-1)
    mask = active[..., None]
    return AttitudeOnlyReference(np.where(mask, eta, 0.0), np.where(mask, eta_dot, 0.0),
                                 np.where(mask, eta_ddot, 0.0))


def euler_matrix(eta):
    """``R = R_z(ψ) R_y(θ) R_x(φ)``."""
    phi, theta, psi = eta
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array([
        [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
        [sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
        [-st, ct * sf, ct * cf],
    ])


def euler_body_rates(eta, eta_dot, eta_ddot):
    """Body rate and acceleration of the yaw-pitch-roll attitude ``η``."""
    phi, theta, _ = eta
    dphi, dtheta, dpsi = eta_dot
    ddphi, ddtheta, ddpsi = eta_ddot
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    w = np.array([
        dphi - dpsi * st,
        dtheta * cf + dpsi * sf * ct,
        -dtheta * sf + dpsi * cf * ct,
    ])
    a = np.array([
        ddphi - ddpsi * st - dpsi * dtheta * ct,
        ddtheta * cf - dtheta * dphi * sf + ddpsi * sf * ct + dpsi * dphi * cf * ct - dpsi * dtheta * sf * st,
        -ddtheta * sf - dtheta * dphi * cf + ddpsi * cf * ct - dpsi * dphi * sf * ct - dpsi * dtheta * cf * st,
    ])
    return w, a


def rotation_reference_from_euler(eta, eta_dot, eta_ddot):
    """``(R_d, Ṙ_d, R̈_d)`` for an Euler-angle reference, via Poisson's equation."""
    R = euler_matrix(eta)
    w, a = euler_body_rates(eta, eta_dot, eta_ddot)
    W = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
    A = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return R, R @ W, R @ (A + W @ W)


# ---------------------------------------------------------------------------
# throw launch
# ---------------------------------------------------------------------------

THROW_TARGET = np.array([0.0, 0.0, 1.0])


def throw_launch_initial(seed, upside_down=True, speed=2.5, omega_max=3.0, spread=0.3,
                         target=THROW_TARGET):
    """Random hand-throw initial state around the target point."""
    rng = np.random.default_rng(seed)
    while True:
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        b3z = rotate(q, np.array([0.0, 0.0, 1.0]))[2]
        if abs(b3z) < 1e-3:
            continue
        if upside_down and b3z > 0.0:
            # a half-turn about the body x axis flips the thrust axis
            q = np.array([-q[1], q[0], q[3], -q[2]])
        break
    if q[0] < 0:
        q = -q
    azimuth = rng.uniform(-np.pi, np.pi)
    elevation = rng.uniform(np.deg2rad(10.0), np.deg2rad(60.0))
    direction = np.array([np.cos(elevation) * np.cos(azimuth), np.cos(elevation) * np.sin(azimuth),
                          np.sin(elevation)])
    nu = speed * direction / np.linalg.norm(direction)
    omega_dir = rng.normal(size=3)
    omega = omega_dir / np.linalg.norm(omega_dir) * rng.uniform(0.0, omega_max)
    xi = np.asarray(target, float) + rng.uniform(-spread, spread, size=3)
    return VehicleState(xi, nu, UnitQuaternion.from_array(q), omega)
