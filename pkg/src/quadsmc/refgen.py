"""Attitude reference generation from the desired thrust vector.

Given the desired thrust vector ``κ`` (and its first two time derivatives)
plus a heading angle, build the desired rotation ``R_d = [b1 b2 b3]`` and its
derivatives, then express the desired angular rate and acceleration in the
tangent space at the current attitude.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .math3d import (check_rotation, from_rotation_matrix, nb_cross, nb_dot, nb_hat, nb_quat_from_matrix,
                     nb_vee, vee)

CHI_MIN = 1e-3


class SingularHeading(ValueError):
    """Thrust axis (nearly) parallel to the heading vector."""


@dataclass(frozen=True)
class FlatInput:
    kappa: np.ndarray
    kappa_dot: np.ndarray
    kappa_ddot: np.ndarray
    psi_d: float = 0.0
    psi_dot_d: float = 0.0
    psi_ddot_d: float = 0.0


@dataclass(frozen=True)
class AttitudeReference:
    q_d: np.ndarray
    omega_d: np.ndarray
    alpha_d: np.ndarray


@dataclass(frozen=True)
class RefGenIntermediates:
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    b1_dot: np.ndarray
    b2_dot: np.ndarray
    b3_dot: np.ndarray
    b1_ddot: np.ndarray
    b2_ddot: np.ndarray
    b3_ddot: np.ndarray
    h: np.ndarray
    chi: np.ndarray
    chi_dot: np.ndarray
    chi_ddot: np.ndarray


@njit(cache=True)
def nb_unit_derivatives(v, vd, vdd):
    """Unit vector ``v/‖v‖`` with its first and second time derivatives."""
    n = np.sqrt(nb_dot(v, v))
    n3 = n * n * n
    n5 = n3 * n * n
    vvd = nb_dot(v, vd)
    u = v / n
    ud = vd / n - vvd * v / n3
    udd = (vdd / n - 2.0 * vvd * vd / n3 - (nb_dot(vd, vd) + nb_dot(v, vdd)) * v / n3
           + 3.0 * vvd * vvd * v / n5)
    return u, ud, udd


@njit(cache=True)
def nb_rotation_reference(kappa, kd, kdd, psi, psid, psidd):
    """Returns ``(R_d, Ṙ_d, R̈_d, ‖χ‖, basis)``; basis rows are b1..b3 then derivatives."""
    b3, b3d, b3dd = nb_unit_derivatives(kappa, kd, kdd)
    c, s = np.cos(psi), np.sin(psi)
    h = np.array([c, s, 0.0])
    hd = psid * np.array([-s, c, 0.0])
    hdd = psidd * np.array([-s, c, 0.0]) - psid * psid * np.array([c, s, 0.0])

    chi = nb_cross(b3, h)
    chid = nb_cross(b3d, h) + nb_cross(b3, hd)
    chidd = nb_cross(b3dd, h) + 2.0 * nb_cross(b3d, hd) + nb_cross(b3, hdd)
    chi_norm = np.sqrt(nb_dot(chi, chi))
    b2, b2d, b2dd = nb_unit_derivatives(chi, chid, chidd)

    b1 = nb_cross(b2, b3)
    b1d = nb_cross(b2d, b3) + nb_cross(b2, b3d)
    b1dd = nb_cross(b2dd, b3) + 2.0 * nb_cross(b2d, b3d) + nb_cross(b2, b3dd)

    R = np.empty((3, 3))
    Rd = np.empty((3, 3))
    Rdd = np.empty((3, 3))
    R[:, 0], R[:, 1], R[:, 2] = b1, b2, b3
    Rd[:, 0], Rd[:, 1], Rd[:, 2] = b1d, b2d, b3d
    Rdd[:, 0], Rdd[:, 1], Rdd[:, 2] = b1dd, b2dd, b3dd

    basis = np.empty((13, 3))
    basis[0], basis[1], basis[2] = b1, b2, b3
    basis[3], basis[4], basis[5] = b1d, b2d, b3d
    basis[6], basis[7], basis[8] = b1dd, b2dd, b3dd
    basis[9], basis[10], basis[11], basis[12] = h, chi, chid, chidd
    return R, Rd, Rdd, chi_norm, basis


@njit(cache=True)
def nb_remap(R, Rd, Rd_dot, Rd_ddot, omega):
    """Desired rate/acceleration mapped to the tangent space at ``R``.

    Returns ``(q_d, ω_d, α_d, ω_Rd, α_Rd)``.
    """
    w_rd = nb_vee(Rd.T @ Rd_dot)
    W = nb_hat(w_rd)
    a_rd = nb_vee(Rd.T @ Rd_ddot - W @ W)
    RtRd = R.T @ Rd
    w_d = RtRd @ w_rd
    a_d = -nb_cross(omega, w_d) + RtRd @ a_rd
    q_d = nb_quat_from_matrix(Rd)
    return q_d, w_d, a_d, w_rd, a_rd


def build_rotation_reference(inp: FlatInput, chi_min=CHI_MIN, return_intermediates=False):
    """Desired rotation and its first two derivatives from a thrust-vector input."""
    kappa = np.asarray(inp.kappa, float)
    if np.linalg.norm(kappa) <= 0.0:
        raise ValueError("thrust vector must be nonzero")
    R, Rd, Rdd, chi_norm, basis = nb_rotation_reference(
        kappa, np.asarray(inp.kappa_dot, float), np.asarray(inp.kappa_ddot, float),
        float(inp.psi_d), float(inp.psi_dot_d), float(inp.psi_ddot_d))
    if chi_norm < chi_min:
        raise SingularHeading(f"|b3 x h| = {chi_norm:.3g} below {chi_min:g}")
    if return_intermediates:
        mids = RefGenIntermediates(*[basis[i].copy() for i in range(13)])
        return R, Rd, Rdd, mids
    return R, Rd, Rdd


def remap_to_body_tangent(R, R_d, R_d_dot, R_d_ddot, omega):
    """Map the desired rate/acceleration of ``R_d`` into the tangent space at ``R``."""
    R = np.asarray(R, float)
    R_d = np.asarray(R_d, float)
    check_rotation(R)
    check_rotation(R_d)
    # reject inconsistent derivative inputs the same way vee does
    vee(R_d.T @ np.asarray(R_d_dot, float), tol=1e-8)
    q_d, w_d, a_d, _, _ = nb_remap(R, R_d, np.asarray(R_d_dot, float), np.asarray(R_d_ddot, float),
                                   np.asarray(omega, float))
    return AttitudeReference(from_rotation_matrix(R_d), w_d, a_d)


def desired_body_rates(R_d, R_d_dot, R_d_ddot):
    """``(ω_Rd, α_Rd)`` expressed in the desired frame."""
    w_rd = vee(np.asarray(R_d).T @ R_d_dot, tol=1e-8)
    W = np.array([[0, -w_rd[2], w_rd[1]], [w_rd[2], 0, -w_rd[0]], [-w_rd[1], w_rd[0], 0]])
    a_rd = vee(np.asarray(R_d).T @ R_d_ddot - W @ W, tol=1e-8)
    return w_rd, a_rd


def continuous_sign(q, q_prev):
    """Flip ``q`` onto the hemisphere of ``q_prev`` (for logging continuity)."""
    if q_prev is not None and float(np.dot(q, q_prev)) < 0.0:
        return -q
    return q
