"""Monte-Carlo gain-sensitivity sweeps and AQSMC parameter studies."""
from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scenarios as scn
from . import sim
from .control_qsmc import default_adapt_params_q

METRIC_FIELDS = ("q_e_rms", "xi_e_rms", "psi_e_rms", "npwm_rms")
STAT_FIELDS = ("mean", "sd", "median", "iqr")

# design bounds rather than gains; the sweep leaves them alone
NON_TUNABLE = frozenset({"pi_q", "pi_xi", "kappa_floor"})


def perturb_gains(base, fraction, rng):
    """Multiply every tunable gain entry by an independent factor ~ U[1−fraction, 1+fraction].

    ``base`` is a gain dataclass or a dict of them (as returned by
    ``scenarios.default_gains``); nested gain objects are perturbed too.
    Entries are visited in declaration order so a seeded ``rng`` gives a
    reproducible result.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError(f"deviation fraction must be in [0, 1), got {fraction}")
    if isinstance(base, dict):
        return {key: perturb_gains(val, fraction, rng) for key, val in base.items()}
    if not dataclasses.is_dataclass(base):
        raise TypeError(f"cannot perturb {type(base).__name__}")
    changes = {}
    for f in dataclasses.fields(base):
        val = getattr(base, f.name)
        if val is None or f.name in NON_TUNABLE:
            continue
        if dataclasses.is_dataclass(val):
            changes[f.name] = perturb_gains(val, fraction, rng)
            continue
        arr = np.asarray(val, dtype=float)
        factors = rng.uniform(1.0 - fraction, 1.0 + fraction, size=arr.shape)
        changes[f.name] = arr * factors
    return dataclasses.replace(base, **changes)


@dataclass
class SweepSpec:
    scenario: str = "lemniscate"
    controllers: tuple = ("qsmc", "esmc", "gtc", "qpd")
    deviation_fraction: float = 0.20
    n_trials: int = 10
    seed: int = 0
    wind: float | None = None
    base_gains: dict = field(default_factory=dict)     # controller -> gains dict; default: tabulated
    sim_config: sim.SimConfig | None = None
    workers: int = 1

    def __post_init__(self):
        if not 0.0 <= self.deviation_fraction < 1.0:
            raise ValueError("deviation_fraction must be in [0, 1)")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        unknown = [c for c in self.controllers if c not in scn.CONTROLLERS]
        if unknown:
            raise ValueError(f"unknown controllers {unknown}")
        self.controllers = tuple(self.controllers)


@dataclass
class TrialRow:
    controller: str
    trial: int
    verdict: str
    failure_kind: str
    failure_message: str
    metrics: dict | None      # None when the trial failed


@dataclass
class SweepSummary:
    spec: SweepSpec
    rows: list
    stats: dict               # controller -> metric -> {mean, sd, median, iqr}
    failures: dict            # controller -> count

    def completed(self, controller):
        return [r for r in self.rows if r.controller == controller and r.metrics is not None]

    def summary_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["controller", "n_trials", "failures"] + [f"{m}_{s}" for m in METRIC_FIELDS for s in STAT_FIELDS])
        for c in self.spec.controllers:
            st = self.stats[c]
            w.writerow([c, self.spec.n_trials, self.failures[c]]
                       + [_fmt(st[m][s]) for m in METRIC_FIELDS for s in STAT_FIELDS])
        return buf.getvalue()

    def trials_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["controller", "trial", "verdict", "failure_kind"] + list(METRIC_FIELDS))
        for r in self.rows:
            vals = [_fmt(r.metrics[m]) if r.metrics else "" for m in METRIC_FIELDS]
            w.writerow([r.controller, r.trial, r.verdict, r.failure_kind] + vals)
        return buf.getvalue()

    def text_table(self):
        head = f"{'controller':<10} {'fail':>4}  " + "  ".join(f"{m + ' med [IQR]':>26}" for m in METRIC_FIELDS)
        lines = [f"sweep: scenario={self.spec.scenario} trials={self.spec.n_trials} "
                 f"deviation=±{100 * self.spec.deviation_fraction:g}% seed={self.spec.seed}", head]
        for c in self.spec.controllers:
            cells = []
            for m in METRIC_FIELDS:
                st = self.stats[c][m]
                cells.append(f"{st['median']:>12.5g} [{st['iqr']:>10.4g}]" if not math.isnan(st["median"])
                             else f"{'n/a':>26}")
            lines.append(f"{c:<10} {self.failures[c]:>4}  " + "  ".join(cells))
        return "\n".join(lines) + "\n"

    def write(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "summary.csv").write_text(self.summary_csv())
        (directory / "trials.csv").write_text(self.trials_csv())
        (directory / "summary.txt").write_text(self.text_table())
        return directory


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _lerp(lo, hi, frac):
    """Interpolation between neighbouring order statistics shared by both quantile routines."""
    return lo + (hi - lo) * frac


def _quantile_position(n, p):
    pos = p * (n - 1)
    lo = int(math.floor(pos))
    return lo, min(lo + 1, n - 1), pos - lo


def select_quantile(values, p):
    """Linear-interpolation quantile by partial selection (``np.partition``), without a full sort."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan
    lo, hi, frac = _quantile_position(v.size, p)
    part = np.partition(v, (lo, hi))
    return float(_lerp(part[lo], part[hi], frac))


def sorted_quantile(values, p):
    """Reference quantile from a full sort; position ``p·(n−1)`` with linear interpolation."""
    xs = sorted(float(x) for x in values)
    if not xs:
        return math.nan
    lo, hi, frac = _quantile_position(len(xs), p)
    return _lerp(xs[lo], xs[hi], frac)


def aggregate(values):
    """Mean, sample sd, median and IQR over completed trials (NaN when none)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return {s: math.nan for s in STAT_FIELDS}
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return {"mean": float(np.mean(v)), "sd": sd, "median": select_quantile(v, 0.5),
            "iqr": select_quantile(v, 0.75) - select_quantile(v, 0.25)}


def trial_rng(seed, controller_index, trial):
    """Independent RNG stream per (seed, controller, trial)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(controller_index), int(trial)]))


def _scenario_for(spec: SweepSpec, trial):
    kw = {}
    if spec.scenario == "lemniscate":
        kw["wind"] = spec.wind
    return scn.scenario_by_name(spec.scenario, seed=spec.seed + trial, **kw)


def _run_one(args):
    spec, ci, controller, trial = args
    scenario = _scenario_for(spec, trial)
    base = spec.base_gains.get(controller) or scn.scenario_gains(controller, scenario)
    gains = perturb_gains(base, spec.deviation_fraction, trial_rng(spec.seed, ci, trial))
    try:
        ctrl = scn.build_controller(controller, scenario, gains=gains)
    except ValueError as exc:   # a perturbation that breaks a gain precondition counts as a failed trial
        return TrialRow(controller, trial, "invalid_gains", "invalid_gains", str(exc), None), None
    result = sim.run_trial(scenario, ctrl, spec.sim_config)
    metrics = result.metrics.as_dict() if result.verdict == "success" and result.metrics is not None else None
    if metrics is not None:
        metrics = {m: metrics[m] for m in METRIC_FIELDS}
    return TrialRow(controller, trial, result.verdict, result.failure_kind, result.failure_message, metrics), result


def run_sweep(spec: SweepSpec, out_dir=None, keep_results=False):
    """Run ``n_trials`` perturbed trials per controller and aggregate.

    Individual trial failures are recorded, never raised. With ``out_dir``
    the summary and per-trial CSVs go to ``out_dir/<scenario>_<timestamp>_<seed>``.
    """
    jobs = [(spec, ci, c, k) for ci, c in enumerate(spec.controllers) for k in range(spec.n_trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outputs = list(pool.map(_run_one, jobs))
    else:
        outputs = [_run_one(j) for j in jobs]
    # aggregation order is fixed by (controller index, trial) regardless of completion order
    order = {c: i for i, c in enumerate(spec.controllers)}
    paired = sorted(zip(jobs, outputs), key=lambda jo: (order[jo[0][2]], jo[0][3]))
    rows = [o[0] for _, o in paired]
    stats, failures = {}, {}
    for c in spec.controllers:
        done = [r for r in rows if r.controller == c and r.metrics is not None]
        failures[c] = sum(1 for r in rows if r.controller == c and r.metrics is None)
        stats[c] = {m: aggregate([r.metrics[m] for r in done]) for m in METRIC_FIELDS}
    summary = SweepSummary(spec, rows, stats, failures)
    if keep_results:
        summary.results = [o[1] for _, o in paired]
    if out_dir is not None:
        stamp = _dt.datetime.now().strftime("%Y%m%dT%H%M%S")
        run_dir = Path(out_dir) / f"{spec.scenario}_{stamp}_{spec.seed}"
        summary.write(run_dir)
        if keep_results:
            for (_, _, c, k), (_, res) in paired:
                if res is not None:
                    sim.write_trial_csv(res, run_dir / f"trial_{c}_{k:03d}.csv")
        summary.run_dir = run_dir
    return summary


# ---------------------------------------------------------------------------
# AQSMC parameter studies (pitch hold with a disturbance step)
# ---------------------------------------------------------------------------

@dataclass
class StudyTrace:
    parameter: str
    value: float
    t: np.ndarray
    K: np.ndarray             # pitch-channel switching gain
    pitch_error: np.ndarray   # rad
    verdict: str
    failure_message: str = ""


PITCH = 1


def aqsmc_parameter_study(parameter, values, scenario=None, config=None):
    """Run the pitch-hold protocol once per value of ``parameter``.

    ``parameter`` is ``"epsilon"``, ``"mu"`` (applied to all axes) or
    ``"K0"`` (initial gain and threshold of the pitch channel, rad/s²).
    """
    if parameter not in ("epsilon", "mu", "K0"):
        raise ValueError(f"unknown study parameter {parameter!r}")
    scenario = scenario or scn.gimbal_step_scenario()
    base = scn.default_gains("aqsmc", scenario.kind)["attitude"]
    traces = []
    for value in values:
        adapt = default_adapt_params_q(base.K_q)
        if parameter == "epsilon":
            adapt = dataclasses.replace(adapt, epsilon=np.full(3, float(value)))
        elif parameter == "mu":
            adapt = dataclasses.replace(adapt, mu=np.full(3, float(value)))
        else:
            K_th = adapt.K_th.copy()
            K_th[PITCH] = float(value)
            adapt = dataclasses.replace(adapt, K_th=K_th)
        ctrl = scn.build_controller("aqsmc", scenario, adapt_q=adapt)
        res = sim.run_trial(scenario, ctrl, config, compute_metrics=False)
        pitch_err = 2.0 * np.arcsin(np.clip(res.q_e[:, 2] * np.sign(res.q_e[:, 0] + (res.q_e[:, 0] == 0)), -1, 1))
        traces.append(StudyTrace(parameter, float(value), res.t, res.K_q[:, PITCH].copy(), pitch_err,
                                 res.verdict, res.failure_message))
    return traces
