"""Quaternion and 3-vector algebra.

Quaternions are stored scalar-first, ``q = [w, x, y, z]``, and compose with
the Hamilton product. A rotation matrix ``R`` built from ``q`` maps body-frame
vectors into the inertial frame, so its columns are the body axes.

The vectorised functions accept a single quaternion of shape ``(4,)`` or a
batch of shape ``(n, 4)``. The ``nb_*`` kernels are scalar numba versions used
inside the simulator's hot loop.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

NORM_TOL = 1e-9
ORTHO_TOL = 1e-6
SKEW_TOL = 1e-9


class NotARotation(ValueError):
    pass


class NotSkewSymmetric(ValueError):
    pass


def _normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


@dataclass(frozen=True)
class UnitQuaternion:
    """Immutable unit quaternion, renormalised on construction."""

    w: float
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        arr = np.concatenate(([float(self.w)], np.asarray(self.v, dtype=float).reshape(3)))
        if not np.all(np.isfinite(arr)):
            raise ValueError("quaternion components must be finite")
        n = np.linalg.norm(arr)
        if n == 0.0:
            raise ValueError("zero quaternion has no attitude")
        arr = arr / n
        object.__setattr__(self, "w", float(arr[0]))
        vec = arr[1:].copy()
        vec.setflags(write=False)
        object.__setattr__(self, "v", vec)

    @classmethod
    def identity(cls):
        return cls(1.0, np.zeros(3))

    @classmethod
    def from_array(cls, q):
        q = np.asarray(q, dtype=float)
        return cls(q[0], q[1:4])

    @classmethod
    def from_axis_angle(cls, axis, angle):
        return cls.from_array(axis_angle_quaternion(axis, angle))

    def as_array(self):
        return np.concatenate(([self.w], self.v))

    def __mul__(self, other):
        return quat_multiply(self, other)

    def __neg__(self):
        return UnitQuaternion(-self.w, -self.v)

    def conj(self):
        return quat_conjugate(self)

    def rotate(self, vec):
        return rotate(self, vec)

    def as_matrix(self):
        return to_rotation_matrix(self)

    def __eq__(self, other):
        if not isinstance(other, UnitQuaternion):
            return NotImplemented
        return self.w == other.w and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash((self.w, *self.v.tolist()))


def _unwrap(q):
    if isinstance(q, UnitQuaternion):
        return q.as_array(), True
    return np.asarray(q, dtype=float), False


def _wrap(q, as_object):
    return UnitQuaternion.from_array(q) if as_object else q


def quat_multiply(q, p):
    """Hamilton product ``q ⊗ p``, renormalised."""
    qa, obj_q = _unwrap(q)
    pa, obj_p = _unwrap(p)
    w1, x1, y1, z1 = np.moveaxis(qa, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(pa, -1, 0)
    out = np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)
    return _wrap(_normalize(out), obj_q or obj_p)


def quat_conjugate(q):
    qa, obj = _unwrap(q)
    out = qa.copy()
    out[..., 1:] *= -1.0
    return _wrap(out, obj)


def rotate(q, v):
    """Apply the rotation operator ``L_q`` to ``v``.

    ``L_q(v) = (w² − |u|²) v + 2 (u·v) u + 2 w (u × v)`` with ``q = [w, u]``.
    """
    qa, _ = _unwrap(q)
    v = np.asarray(v, dtype=float)
    w = qa[..., :1]
    u = qa[..., 1:]
    uu = np.sum(u * u, axis=-1, keepdims=True)
    uv = np.sum(u * v, axis=-1, keepdims=True)
    return (w * w - uu) * v + 2.0 * uv * u + 2.0 * w * np.cross(u, v)


def to_rotation_matrix(q):
    qa, _ = _unwrap(q)
    w, x, y, z = np.moveaxis(qa, -1, 0)
    R = np.empty(qa.shape[:-1] + (3, 3))
    R[..., 0, 0] = w * w + x * x - y * y - z * z
    R[..., 0, 1] = 2.0 * (x * y - w * z)
    R[..., 0, 2] = 2.0 * (x * z + w * y)
    R[..., 1, 0] = 2.0 * (x * y + w * z)
    R[..., 1, 1] = w * w - x * x + y * y - z * z
    R[..., 1, 2] = 2.0 * (y * z - w * x)
    R[..., 2, 0] = 2.0 * (x * z - w * y)
    R[..., 2, 1] = 2.0 * (y * z + w * x)
    R[..., 2, 2] = w * w - x * x - y * y + z * z
    return R


def check_rotation(R, tol=ORTHO_TOL):
    R = np.asarray(R, dtype=float)
    eye = np.broadcast_to(np.eye(3), R.shape)
    ortho = np.max(np.abs(np.swapaxes(R, -1, -2) @ R - eye))
    det = np.max(np.abs(np.linalg.det(R) - 1.0))
    if not (ortho <= tol and det <= tol):
        raise NotARotation(f"not a rotation matrix (orthogonality error {ortho:.3g}, det error {det:.3g})")


def from_rotation_matrix(R, as_object=False):
    """Quaternion from a rotation matrix with Shepperd's branch selection.

    The sign is fixed so that ``w >= 0``.
    """
    R = np.asarray(R, dtype=float)
    check_rotation(R)
    tr = R[..., 0, 0] + R[..., 1, 1] + R[..., 2, 2]
    diag = np.stack([tr, R[..., 0, 0], R[..., 1, 1], R[..., 2, 2]], axis=-1)
    branch = np.argmax(diag, axis=-1)

    cands = np.empty(R.shape[:-2] + (4, 4))
    # branch 0: trace largest
    s = 2.0 * np.sqrt(np.maximum(1.0 + tr, 0.0))
    s0 = np.where(s > 0, s, 1.0)
    cands[..., 0, :] = np.stack([0.25 * s, (R[..., 2, 1] - R[..., 1, 2]) / s0,
                                 (R[..., 0, 2] - R[..., 2, 0]) / s0, (R[..., 1, 0] - R[..., 0, 1]) / s0], axis=-1)
    s = 2.0 * np.sqrt(np.maximum(1.0 + R[..., 0, 0] - R[..., 1, 1] - R[..., 2, 2], 0.0))
    s0 = np.where(s > 0, s, 1.0)
    cands[..., 1, :] = np.stack([(R[..., 2, 1] - R[..., 1, 2]) / s0, 0.25 * s,
                                 (R[..., 0, 1] + R[..., 1, 0]) / s0, (R[..., 0, 2] + R[..., 2, 0]) / s0], axis=-1)
    s = 2.0 * np.sqrt(np.maximum(1.0 - R[..., 0, 0] + R[..., 1, 1] - R[..., 2, 2], 0.0))
    s0 = np.where(s > 0, s, 1.0)
    cands[..., 2, :] = np.stack([(R[..., 0, 2] - R[..., 2, 0]) / s0, (R[..., 0, 1] + R[..., 1, 0]) / s0,
                                 0.25 * s, (R[..., 1, 2] + R[..., 2, 1]) / s0], axis=-1)
    s = 2.0 * np.sqrt(np.maximum(1.0 - R[..., 0, 0] - R[..., 1, 1] + R[..., 2, 2], 0.0))
    s0 = np.where(s > 0, s, 1.0)
    cands[..., 3, :] = np.stack([(R[..., 1, 0] - R[..., 0, 1]) / s0, (R[..., 0, 2] + R[..., 2, 0]) / s0,
                                 (R[..., 1, 2] + R[..., 2, 1]) / s0, 0.25 * s], axis=-1)

    q = np.take_along_axis(cands, branch[..., None, None], axis=-2)[..., 0, :]
    q = np.where(q[..., :1] < 0.0, -q, q)
    q = _normalize(q)
    return UnitQuaternion.from_array(q) if as_object else q


def axis_angle_quaternion(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    angle = np.asarray(angle, dtype=float)[..., None]
    return np.concatenate([np.cos(0.5 * angle), np.sin(0.5 * angle) * axis], axis=-1)


def axis_angle_matrix(axis, angle):
    """Rodrigues formula, used as an independent oracle for quaternion maps."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = hat(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def hat(v):
    v = np.asarray(v, dtype=float)
    M = np.zeros(v.shape[:-1] + (3, 3))
    M[..., 0, 1] = -v[..., 2]
    M[..., 0, 2] = v[..., 1]
    M[..., 1, 0] = v[..., 2]
    M[..., 1, 2] = -v[..., 0]
    M[..., 2, 0] = -v[..., 1]
    M[..., 2, 1] = v[..., 0]
    return M


def vee(M, tol=SKEW_TOL):
    M = np.asarray(M, dtype=float)
    asym = np.max(np.abs(M + np.swapaxes(M, -1, -2)))
    if asym > tol:
        raise NotSkewSymmetric(f"matrix is not skew-symmetric (residual {asym:.3g})")
    return np.stack([M[..., 2, 1], M[..., 0, 2], M[..., 1, 0]], axis=-1)


def sgn_plus(x):
    """Sign with ``sgn_plus(0) = +1``."""
    return np.where(np.asarray(x) >= 0.0, 1.0, -1.0) if np.ndim(x) else (1.0 if x >= 0.0 else -1.0)


def quat_derivative(q, omega):
    """``q̇ = ½ q ⊗ [0, ω]`` with ω in the body frame (not renormalised)."""
    qa, _ = _unwrap(q)
    omega = np.asarray(omega, dtype=float)
    w = qa[..., :1]
    u = qa[..., 1:]
    dw = -0.5 * np.sum(u * omega, axis=-1, keepdims=True)
    du = 0.5 * (w * omega + np.cross(u, omega))
    return np.concatenate([dw, du], axis=-1)


def yaw_from_quaternion(q):
    qa, _ = _unwrap(q)
    w, x, y, z = np.moveaxis(qa, -1, 0)
    return np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))


def wrap_angle(a):
    """Wrap to (−π, π]."""
    a = np.asarray(a, dtype=float)
    out = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


# ---------------------------------------------------------------------------
# scalar numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def nb_cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def nb_dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def nb_sgn_plus(x):
    return 1.0 if x >= 0.0 else -1.0


@njit(cache=True)
def nb_qmul(q, p):
    out = np.empty(4)
    out[0] = q[0] * p[0] - q[1] * p[1] - q[2] * p[2] - q[3] * p[3]
    out[1] = q[0] * p[1] + q[1] * p[0] + q[2] * p[3] - q[3] * p[2]
    out[2] = q[0] * p[2] - q[1] * p[3] + q[2] * p[0] + q[3] * p[1]
    out[3] = q[0] * p[3] + q[1] * p[2] - q[2] * p[1] + q[3] * p[0]
    n = np.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2 + out[3] ** 2)
    return out / n


@njit(cache=True)
def nb_qconj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


@njit(cache=True)
def nb_rotate(q, v):
    u = q[1:]
    w = q[0]
    c = nb_cross(u, v)
    return (w * w - nb_dot(u, u)) * v + 2.0 * nb_dot(u, v) * u + 2.0 * w * c


@njit(cache=True)
def nb_qmat(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = w * w + x * x - y * y - z * z
    R[0, 1] = 2.0 * (x * y - w * z)
    R[0, 2] = 2.0 * (x * z + w * y)
    R[1, 0] = 2.0 * (x * y + w * z)
    R[1, 1] = w * w - x * x + y * y - z * z
    R[1, 2] = 2.0 * (y * z - w * x)
    R[2, 0] = 2.0 * (x * z - w * y)
    R[2, 1] = 2.0 * (y * z + w * x)
    R[2, 2] = w * w - x * x - y * y + z * z
    return R


@njit(cache=True)
def nb_quat_from_matrix(R):
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    q = np.empty(4)
    if tr >= R[0, 0] and tr >= R[1, 1] and tr >= R[2, 2]:
        s = 2.0 * np.sqrt(1.0 + tr)
        q[0] = 0.25 * s
        q[1] = (R[2, 1] - R[1, 2]) / s
        q[2] = (R[0, 2] - R[2, 0]) / s
        q[3] = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = 2.0 * np.sqrt(max(1.0 + R[0, 0] - R[1, 1] - R[2, 2], 1e-300))
        q[0] = (R[2, 1] - R[1, 2]) / s
        q[1] = 0.25 * s
        q[2] = (R[0, 1] + R[1, 0]) / s
        q[3] = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] >= R[2, 2]:
        s = 2.0 * np.sqrt(max(1.0 - R[0, 0] + R[1, 1] - R[2, 2], 1e-300))
        q[0] = (R[0, 2] - R[2, 0]) / s
        q[1] = (R[0, 1] + R[1, 0]) / s
        q[2] = 0.25 * s
        q[3] = (R[1, 2] + R[2, 1]) / s
    else:
        s = 2.0 * np.sqrt(max(1.0 - R[0, 0] - R[1, 1] + R[2, 2], 1e-300))
        q[0] = (R[1, 0] - R[0, 1]) / s
        q[1] = (R[0, 2] + R[2, 0]) / s
        q[2] = (R[1, 2] + R[2, 1]) / s
        q[3] = 0.25 * s
    if q[0] < 0.0:
        q = -q
    n = np.sqrt(q[0] ** 2 + q[1] ** 2 + q[2] ** 2 + q[3] ** 2)
    return q / n


@njit(cache=True)
def nb_hat(v):
    M = np.zeros((3, 3))
    M[0, 1] = -v[2]
    M[0, 2] = v[1]
    M[1, 0] = v[2]
    M[1, 2] = -v[0]
    M[2, 0] = -v[1]
    M[2, 1] = v[0]
    return M


@njit(cache=True)
def nb_vee(M):
    # antisymmetric part; callers guarantee skew inputs up to round-off
    out = np.empty(3)
    out[0] = 0.5 * (M[2, 1] - M[1, 2])
    out[1] = 0.5 * (M[0, 2] - M[2, 0])
    out[2] = 0.5 * (M[1, 0] - M[0, 1])
    return out
