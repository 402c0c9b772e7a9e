"""``quadsmc`` command line: single trials, gain sweeps, AQSMC parameter studies and the verification suite.

Exit codes: 0 success, 1 configuration or usage error, 2 trial failure
(``run``), number of failed checks capped at 255 (``verify``).
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import scenarios as scn
from .config import ConfigError, RunConfig, load_config, merged

MANIFEST_VERSION = 1
DEFAULT_OUT = "quadsmc_out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for trial failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_out():
    return os.environ.get("QUADSMC_OUT_DIR") or DEFAULT_OUT


def _make_run_dir(base, stem):
    """``base/<stem>_<timestamp>``, with a numeric suffix if that already exists."""
    stamp = _dt.datetime.now().strftime("%Y%m%dT%H%M%S")
    base = Path(base)
    path = base / f"{stem}_{stamp}"
    n = 1
    while path.exists():
        path = base / f"{stem}_{stamp}_{n}"
        n += 1
    path.mkdir(parents=True)
    return path


def _json_value(x):
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_json_value(v) for v in np.asarray(x).tolist()] if isinstance(x, np.ndarray) else \
            [_json_value(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _write_json(path, obj):
    Path(path).write_text(json.dumps(_json_value(obj), indent=2, sort_keys=False) + "\n")


def _gain_snapshot(gains):
    """Flat ``group -> field -> value`` view of resolved gain objects (nested groups are left to defaults)."""
    out = {}
    for group, obj in gains.items():
        fields = {}
        for f in dataclasses.fields(obj):
            val = getattr(obj, f.name)
            if val is None or dataclasses.is_dataclass(val):
                continue
            fields[f.name] = np.asarray(val, float).tolist()
        out[group] = fields
    return out


def _resolved_config(cfg: RunConfig, controllers, scenario):
    """``cfg`` with the gains of ``controllers`` spelled out, so the snapshot does not rely on defaults."""
    snap = cfg.to_dict()
    gains = snap.setdefault("gains", {})
    for c in controllers:
        gains[c] = _gain_snapshot(cfg.controller_gains(c, scenario))
    return snap


def _manifest(args, cfg, snapshot, out_dir, command):
    return {
        "manifest_version": MANIFEST_VERSION,
        "tool": "quadsmc",
        "version": __version__,
        "command": command,
        "argv": list(args.argv),
        "config_path": str(args.config) if args.config else None,
        "seed": cfg.seed,
        "output_dir": str(out_dir),
        "config": snapshot,
    }


def _load(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    return merged(cfg, scenario=getattr(args, "scenario", None), controller=getattr(args, "controller", None),
                  seed=args.seed, wind=getattr(args, "wind", None))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(args):
    from . import sim
    cfg = _load(args)
    scenario = cfg.build_scenario()
    controller = cfg.build_controller(cfg.controller, scenario)
    sim_cfg = cfg.sim_config()
    snapshot = _resolved_config(cfg, [cfg.controller], scenario)

    started = time.perf_counter()
    result = sim.run_trial(scenario, controller, sim_cfg)
    elapsed = time.perf_counter() - started

    out_dir = _make_run_dir(args.out, f"{cfg.scenario}_{cfg.controller}_seed{cfg.seed}")
    sim.write_trial_csv(result, out_dir / "trial.csv")
    summary = {
        "scenario": result.scenario,
        "controller": result.controller,
        "verdict": result.verdict,
        "failure_kind": result.failure_kind,
        "failure_message": result.failure_message,
        "saturation_count": result.saturation_count,
        "final_time": float(result.t[-1]) if result.t.size else 0.0,
        "total_rotation": result.total_rotation() if result.t.size > 1 else 0.0,
        "metrics": result.metrics.as_dict() if result.metrics is not None else None,
    }
    if cfg.scenario == "throw":
        summary["recovery_time"] = result.recovery_time(target=np.array([0.0, 0.0, 1.0]))
    if result.lyapunov is not None:
        summary["lyapunov_increases_outside_layer"] = int(result.lyapunov.increases_outside_layer().size)
    _write_json(out_dir / "summary.json", summary)
    _write_json(out_dir / "manifest.json", _manifest(args, cfg, snapshot, out_dir, "run"))
    if args.plot:
        from .plots import write_trial_plots
        write_trial_plots(result, out_dir / "plots")

    print(f"scenario={result.scenario} controller={result.controller} verdict={result.verdict}")
    if result.metrics is not None:
        m = result.metrics
        print(f"  q_e_rms={m.q_e_rms:.6g} xi_e_rms={m.xi_e_rms:.6g} m psi_e_rms={m.psi_e_rms:.6g} deg "
              f"npwm_rms={m.npwm_rms:.6g}")
    if not result.success:
        print(f"  failure: {result.failure_kind}: {result.failure_message}")
    print(f"  wall time {elapsed:.2f} s; output {out_dir}")
    return 0 if result.success else 2


def cmd_sweep(args):
    from .harness import SweepSpec, run_sweep
    cfg = _load(args)
    cfg = merged(cfg, trials=args.trials, deviation=args.deviation, workers=args.workers,
                 controllers=args.controllers)
    sw = cfg.sweep
    controllers = tuple(sw.get("controllers") or ("qsmc", "esmc", "gtc", "qpd"))
    scenario = cfg.build_scenario()
    base = {c: cfg.controller_gains(c, scenario) for c in controllers}
    spec = SweepSpec(scenario=cfg.scenario, controllers=controllers,
                     deviation_fraction=sw.get("deviation", 0.20), n_trials=sw.get("trials", 10), seed=cfg.seed,
                     wind=cfg.wind, base_gains=base, sim_config=cfg.sim_config(), workers=sw.get("workers", 1))
    snapshot = _resolved_config(cfg, controllers, scenario)
    snapshot["sweep"] = {"trials": spec.n_trials, "deviation": spec.deviation_fraction,
                         "controllers": list(controllers), "workers": spec.workers}
    summary = run_sweep(spec, out_dir=args.out, keep_results=args.trial_csv)
    _write_json(summary.run_dir / "manifest.json", _manifest(args, cfg, snapshot, summary.run_dir, "sweep"))
    sys.stdout.write(summary.text_table())
    print(f"output {summary.run_dir}")
    return 0


def cmd_study(args):
    from .harness import aqsmc_parameter_study
    cfg = _load(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {args.values!r}", field_name="--values") from None
    if not values:
        raise ConfigError("no values given", field_name="--values")
    traces = aqsmc_parameter_study(args.parameter, values, config=cfg.sim_config())
    out_dir = _make_run_dir(args.out, f"study_{args.parameter}_seed{cfg.seed}")
    t = traces[0].t
    cols = [t] + [tr.K for tr in traces] + [tr.pitch_error for tr in traces]
    n = min(len(c) for c in cols)
    header = ["t"] + [f"K_{args.parameter}={tr.value:g}" for tr in traces] + \
             [f"pitch_error_{args.parameter}={tr.value:g}" for tr in traces]
    np.savetxt(out_dir / "study.csv", np.column_stack([c[:n] for c in cols]), fmt="%.17g", delimiter=",",
               header=",".join(header), comments="")
    rows = []
    for tr in traces:
        rows.append({"value": tr.value, "verdict": tr.verdict, "K0": float(tr.K[0]), "K_max": float(tr.K.max()),
                     "K_final": float(tr.K[-1]), "failure_message": tr.failure_message})
        print(f"{args.parameter}={tr.value:<10g} verdict={tr.verdict:<8} K(0)={tr.K[0]:.6g} "
              f"max K={tr.K.max():.6g} final K={tr.K[-1]:.6g}")
    _write_json(out_dir / "summary.json", {"parameter": args.parameter, "traces": rows})
    snapshot = cfg.to_dict()
    snapshot["study"] = {"parameter": args.parameter, "values": values}
    _write_json(out_dir / "manifest.json", _manifest(args, cfg, snapshot, out_dir, "study"))
    if args.plot:
        from .plots import write_study_plot
        write_study_plot(traces, out_dir / "study.svg")
    print(f"output {out_dir}")
    return 0


def cmd_verify(args):
    from .verify import print_table, run_checks
    checks = run_checks(tolerance_scale=args.verify_tolerance_scale, suite=args.suite, only=args.only)
    if not checks:
        raise UsageError(f"quadsmc verify: error: no check matches {args.only}")
    print_table(checks)
    failed = sum(1 for c in checks if not c.passed)
    return min(failed, 255)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(p, scenario=True, controller=True):
    if scenario:
        p.add_argument("--scenario", choices=scn.SCENARIOS, help="scenario id (default: from config, else hover)")
    if controller:
        p.add_argument("--controller", choices=scn.CONTROLLERS, help="controller (default: from config, else qsmc)")
    p.add_argument("--config", type=Path, help="INI or JSON run configuration (a manifest.json also works)")
    p.add_argument("--seed", type=int, help="random seed (default: from config, else 0)")
    p.add_argument("--out", default=_default_out(),
                   help="output base directory (default: $QUADSMC_OUT_DIR or ./quadsmc_out)")
    if scenario:
        p.add_argument("--wind", type=float, help="lemniscate wind speed in m/s (default 3.8)")


def build_parser():
    parser = _Parser(prog="quadsmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"quadsmc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one trial")
    _common(p)
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True, help="write SVG plots")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="±deviation gain sensitivity sweep")
    _common(p, controller=False)
    p.add_argument("--controller", dest="controllers", action="append", choices=scn.CONTROLLERS,
                   help="controller to include; repeat for several (default: qsmc esmc gtc qpd)")
    p.add_argument("--trials", type=int, help="trials per controller (default 10)")
    p.add_argument("--deviation", type=float, help="relative gain deviation in [0, 1) (default 0.2)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--trial-csv", action="store_true", help="also write one CSV per trial")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("study", help="AQSMC parameter study on the pitch-hold disturbance protocol")
    _common(p, scenario=False, controller=False)
    p.add_argument("--parameter", choices=("epsilon", "mu", "K0"), required=True)
    p.add_argument("--values", required=True, help="comma-separated parameter values")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True, help="write an SVG plot")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("verify", help="run the invariant and acceptance checks")
    p.add_argument("--verify-tolerance-scale", type=float, default=1.0,
                   help="multiply every numeric tolerance by this factor (e.g. 0.01 tightens 100x)")
    p.add_argument("--suite", choices=("all", "invariants", "acceptance"), default="all")
    p.add_argument("--only", action="append", metavar="PREFIX",
                   help="run only checks whose name starts with PREFIX (repeatable), e.g. refgen. or 'criterion 04'")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.argv = argv
        if getattr(args, "verify_tolerance_scale", 1.0) <= 0:
            raise UsageError("quadsmc verify: error: --verify-tolerance-scale must be positive")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
