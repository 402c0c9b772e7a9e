"""Static SVG figures of a trial: tracking errors, NPWM, switching gains and Lyapunov values."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    # fixed metadata and hash salt keep the SVG text reproducible
    matplotlib.rcParams["svg.hashsalt"] = "quadsmc"
    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})


def write_trial_plots(result, directory):
    """Write ``errors.svg``, ``npwm.svg``, ``gains.svg`` and ``lyapunov.svg``; returns the paths."""
    plt = _pyplot()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    t = result.t
    paths = []

    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    sign = np.where(result.q_e[:, 0] >= 0.0, 1.0, -1.0)
    for i, name in enumerate("xyz"):
        axes[0].plot(t, sign * result.q_e[:, i + 1], label=f"q_e,{name}")
        axes[1].plot(t, result.xi_error[:, i], label=f"ξ_e,{name}")
    axes[0].set_ylabel("sgn₊(q_we) q⃗_e")
    axes[1].set_ylabel("ξ_e [m]")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.legend(loc="upper right", fontsize=7)
        ax.grid(alpha=0.3)
    axes[0].set_title(f"{result.scenario} / {result.controller}: {result.verdict}")
    paths.append(directory / "errors.svg")
    _save(fig, paths[-1])
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 3))
    for i in range(4):
        ax.plot(t, result.npwm[:, i], label=f"motor {i + 1}", lw=0.8)
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("NPWM")
    ax.legend(loc="upper right", fontsize=7, ncol=4)
    paths.append(directory / "npwm.svg")
    _save(fig, paths[-1])
    plt.close(fig)

    fig, axes = plt.subplots(2, 1, figsize=(7, 4), sharex=True)
    for i, name in enumerate("xyz"):
        axes[0].plot(t, result.K_q[:, i], label=f"K_q,{name}")
        axes[1].plot(t, result.K_xi[:, i], label=f"K_ξ,{name}")
    axes[0].set_ylabel("K_q [rad/s²]")
    axes[1].set_ylabel("K_ξ [m/s²]")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.legend(loc="upper right", fontsize=7)
    paths.append(directory / "gains.svg")
    _save(fig, paths[-1])
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 3))
    floor = 1e-300
    ax.semilogy(t, np.maximum(result.V_q, floor), label="V_q")
    ax.semilogy(t, np.maximum(result.V_xi, floor), label="V_ξ")
    ax.set_xlabel("t [s]")
    ax.legend(loc="upper right", fontsize=7)
    paths.append(directory / "lyapunov.svg")
    _save(fig, paths[-1])
    plt.close(fig)
    return paths


def write_study_plot(traces, path):
    """K(t) and pitch error of an AQSMC parameter study, one line per value."""
    plt = _pyplot()
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for tr in traces:
        axes[0].plot(tr.t, tr.K, label=f"{tr.parameter} = {tr.value:g}")
        axes[1].plot(tr.t, np.rad2deg(tr.pitch_error), label=f"{tr.parameter} = {tr.value:g}")
    axes[0].set_ylabel("K (pitch) [rad/s²]")
    axes[1].set_ylabel("pitch error [deg]")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.legend(loc="upper right", fontsize=7)
        ax.grid(alpha=0.3)
    _save(fig, path)
    plt.close(fig)
    return path
