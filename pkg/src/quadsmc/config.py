"""Run configuration: sectioned key-value files (INI style) or JSON.

Layout, with every section optional::

    [run]
    scenario = lemniscate        ; hover | gimbal1 | gimbal2 | gimbal_step | lemniscate | throw | unwinding | lyapunov
    controller = aqsmc           ; qsmc | aqsmc | esmc | gtc | qpd
    seed = 0
    wind = 3.8                   ; m/s, lemniscate only
    duration = 40                ; s, default: the scenario's own

    [sim]
    dt_physics = 5e-4
    attitude_rate = 500
    position_rate = 250
    crash_threshold = 5.0

    [sweep]
    trials = 10
    deviation = 0.2
    controllers = qsmc, esmc, gtc, qpd
    workers = 1

    [vehicle]
    m = 0.032
    J = 1.66e-5, 1.66e-5, 2.93e-5

    [gains.qsmc.attitude]        ; gains.<controller>.<group>, fields as in the gain dataclasses
    K_q = 400, 400, 400

    [adapt.q]                    ; AQSMC attitude channel (adapt.xi for position)
    Gamma = 1e7
    epsilon = 0.8

JSON files use the same nesting: ``{"run": {...}, "gains": {"qsmc":
{"attitude": {...}}}, "adapt": {"q": {...}}}``. A run manifest is also a
valid JSON config (its ``config`` member is used).
"""
from __future__ import annotations

import configparser
import copy
import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scenarios as scn
from .sim import SimConfig
from .vehicle import VehicleParams

RUN_KEYS = {"scenario": str, "controller": str, "seed": int, "wind": float, "duration": float}
SIM_KEYS = {"dt_physics": float, "attitude_rate": float, "position_rate": float, "crash_threshold": float}
SWEEP_KEYS = {"trials": int, "deviation": float, "controllers": "list", "workers": int}
VEHICLE_KEYS = {"m": float, "J": "vec", "m_hat": float, "J_hat": "vec", "c_t": float, "c_q": float, "l": float,
                "beta": float, "omega_rotor_max": float}
ADAPT_KEYS = {"Gamma": "vec", "epsilon": "vec", "mu": "vec", "K_th": "vec"}
ADAPT_TOP_KEYS = {"K_q0": "vec", "K_xi0": "vec", "law": str}


class ConfigError(ValueError):
    """Invalid configuration; ``str()`` names the file, line (when known) and field."""

    def __init__(self, message, path=None, line=None, field_name=None):
        self.path, self.line, self.field_name = path, line, field_name
        where = str(path) if path else "<config>"
        if line is not None:
            where += f":{line}"
        if field_name:
            where += f": field '{field_name}'"
        super().__init__(f"{where}: {message}")


@dataclass
class RunConfig:
    scenario: str = "hover"
    controller: str = "qsmc"
    seed: int = 0
    wind: float | None = None
    duration: float | None = None
    sim: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    vehicle: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)     # controller -> group -> field -> value
    adapt: dict = field(default_factory=dict)     # "q"/"xi" -> AdaptParams fields; plus K_q0, K_xi0, law
    source: str | None = None

    # ---- snapshot -----------------------------------------------------------
    def to_dict(self):
        d = {"run": {"scenario": self.scenario, "controller": self.controller, "seed": self.seed}}
        if self.wind is not None:
            d["run"]["wind"] = self.wind
        if self.duration is not None:
            d["run"]["duration"] = self.duration
        for key in ("sim", "sweep", "vehicle", "gains", "adapt"):
            val = getattr(self, key)
            if val:
                d[key] = _jsonable(val)
        return d

    # ---- resolution ---------------------------------------------------------
    def sim_config(self):
        try:
            return SimConfig(duration=self.duration, seed=self.seed, **self.sim)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), self.source, field_name="sim") from None

    def vehicle_params(self):
        try:
            return VehicleParams(**{k: (np.asarray(v, float) if isinstance(v, list) else v)
                                    for k, v in self.vehicle.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), self.source, field_name="vehicle") from None

    def build_scenario(self, name=None, seed=None):
        name = name or self.scenario
        seed = self.seed if seed is None else seed
        kw = {"wind": self.wind} if name == "lemniscate" else {}
        try:
            sc = scn.scenario_by_name(name, seed=seed, **kw)
        except ValueError as exc:
            raise ConfigError(str(exc), self.source, field_name="run.scenario") from None
        if self.vehicle:
            sc.params = self.vehicle_params()
        return sc

    def controller_gains(self, controller, scenario):
        """Tabulated gains for the scenario with this config's overrides applied."""
        base = scn.scenario_gains(controller, scenario)
        over = self.gains.get(controller, {})
        out = dict(base)
        for group, fields in over.items():
            if group not in out:
                raise ConfigError(f"controller {controller!r} has no gain group {group!r} in scenario "
                                  f"{scenario.kind!r} (available: {', '.join(sorted(out))})", self.source,
                                  field_name=f"gains.{controller}.{group}")
            obj = out[group]
            names = {f.name for f in dataclasses.fields(obj)}
            bad = set(fields) - names
            if bad:
                raise ConfigError(f"unknown gain field(s) {sorted(bad)}; expected one of {sorted(names)}",
                                  self.source, field_name=f"gains.{controller}.{group}.{sorted(bad)[0]}")
            try:
                out[group] = dataclasses.replace(obj, **{k: np.asarray(v, float) for k, v in fields.items()})
            except ValueError as exc:
                raise ConfigError(str(exc), self.source, field_name=f"gains.{controller}.{group}") from None
        return out

    def controller_options(self, controller, gains):
        if controller != "aqsmc":
            return {}
        from .control_qsmc import default_adapt_params_q, default_adapt_params_xi
        opts = {}
        for chan, maker, gkey, kname in (("q", default_adapt_params_q, "attitude", "K_q"),
                                         ("xi", default_adapt_params_xi, "position", "K_xi")):
            over = self.adapt.get(chan)
            if not over or gains.get(gkey) is None:
                continue
            base = maker(getattr(gains[gkey], kname))
            try:
                opts[f"adapt_{chan}"] = dataclasses.replace(
                    base, **{k: np.broadcast_to(np.asarray(v, float), (3,)).copy() for k, v in over.items()})
            except ValueError as exc:
                raise ConfigError(str(exc), self.source, field_name=f"adapt.{chan}") from None
        for key in ("K_q0", "K_xi0", "law"):
            if key in self.adapt:
                opts[key] = self.adapt[key]
        return opts

    def build_controller(self, controller, scenario):
        gains = self.controller_gains(controller, scenario)
        try:
            return scn.build_controller(controller, scenario, gains=gains, **self.controller_options(controller,
                                                                                                      gains))
        except ValueError as exc:
            raise ConfigError(str(exc), self.source, field_name="run.controller") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# value parsing
# ---------------------------------------------------------------------------

def _parse_value(raw, kind, where):
    path, line, name = where
    text = raw.strip() if isinstance(raw, str) else raw
    try:
        if kind is str:
            if not isinstance(text, str) or not text:
                raise ValueError("expected a non-empty string")
            return text
        if kind is int:
            if isinstance(text, bool):
                raise ValueError
            val = int(text) if not isinstance(text, float) else None
            if val is None:
                raise ValueError
            return val
        if kind is float:
            if isinstance(text, bool):
                raise ValueError
            val = float(text)
            if not np.isfinite(val):
                raise ValueError
            return val
        if kind == "list":
            items = text if isinstance(text, list) else [t.strip() for t in text.split(",") if t.strip()]
            if not items or not all(isinstance(i, str) for i in items):
                raise ValueError
            return items
        if kind == "vec":
            items = text if isinstance(text, list) else ([text] if isinstance(text, (int, float))
                                                         else [t for t in re.split(r"[,\s]+", text) if t])
            vals = [float(v) for v in items]
            if len(vals) not in (1, 3) or not all(np.isfinite(vals)):
                raise ValueError
            return vals[0] if len(vals) == 1 else vals
    except (TypeError, ValueError):
        expect = {str: "a string", int: "an integer", float: "a number", "list": "a comma-separated list",
                  "vec": "1 or 3 finite numbers"}[kind]
        raise ConfigError(f"expected {expect}, got {raw!r}", path, line, name) from None
    raise AssertionError(kind)


def _apply_section(cfg: RunConfig, section, items, locate):
    """Store one section's ``items`` (key -> raw) in ``cfg``; ``locate(key)`` gives a line number."""
    path = cfg.source
    if section in ("run", "sim", "sweep", "vehicle"):
        schema = {"run": RUN_KEYS, "sim": SIM_KEYS, "sweep": SWEEP_KEYS, "vehicle": VEHICLE_KEYS}[section]
        for key, raw in items.items():
            name = f"{section}.{key}"
            if key not in schema:
                raise ConfigError(f"unknown key (expected one of {', '.join(schema)})", path, locate(key), name)
            val = _parse_value(raw, schema[key], (path, locate(key), name))
            if section == "run":
                setattr(cfg, key, val)
            else:
                getattr(cfg, section)[key] = val
        return
    parts = section.split(".")
    if parts[0] == "gains" and len(parts) == 3:
        _, ctrl, group = parts
        if ctrl not in scn.CONTROLLERS:
            raise ConfigError(f"unknown controller {ctrl!r}", path, locate(None), section)
        dest = cfg.gains.setdefault(ctrl, {}).setdefault(group, {})
        for key, raw in items.items():
            dest[key] = _parse_value(raw, "vec", (path, locate(key), f"{section}.{key}"))
        return
    if section == "adapt":
        for key, raw in items.items():
            if key not in ADAPT_TOP_KEYS:
                raise ConfigError(f"unknown key (expected one of {', '.join(ADAPT_TOP_KEYS)})", path,
                                  locate(key), f"adapt.{key}")
            cfg.adapt[key] = _parse_value(raw, ADAPT_TOP_KEYS[key], (path, locate(key), f"adapt.{key}"))
        return
    if parts[0] == "adapt" and len(parts) == 2 and parts[1] in ("q", "xi"):
        dest = cfg.adapt.setdefault(parts[1], {})
        for key, raw in items.items():
            if key not in ADAPT_KEYS:
                raise ConfigError(f"unknown key (expected one of {', '.join(ADAPT_KEYS)})", path, locate(key),
                                  f"{section}.{key}")
            dest[key] = _parse_value(raw, "vec", (path, locate(key), f"{section}.{key}"))
        return
    raise ConfigError("unknown section", path, locate(None), section)


def _validate(cfg: RunConfig):
    if cfg.scenario not in scn.SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r} (expected one of {', '.join(scn.SCENARIOS)})",
                          cfg.source, field_name="run.scenario")
    if cfg.controller not in scn.CONTROLLERS:
        raise ConfigError(f"unknown controller {cfg.controller!r} (expected one of {', '.join(scn.CONTROLLERS)})",
                          cfg.source, field_name="run.controller")
    if cfg.seed < 0:
        raise ConfigError("seed must be non-negative", cfg.source, field_name="run.seed")
    if cfg.wind is not None and cfg.wind < 0:
        raise ConfigError("wind speed must be non-negative", cfg.source, field_name="run.wind")
    dev = cfg.sweep.get("deviation")
    if dev is not None and not 0.0 <= dev < 1.0:
        raise ConfigError("deviation must be in [0, 1)", cfg.source, field_name="sweep.deviation")
    if cfg.sweep.get("trials", 1) < 1:
        raise ConfigError("trials must be at least 1", cfg.source, field_name="sweep.trials")
    for c in cfg.sweep.get("controllers", []):
        if c not in scn.CONTROLLERS:
            raise ConfigError(f"unknown controller {c!r}", cfg.source, field_name="sweep.controllers")
    if cfg.adapt.get("law", "bounded") not in ("bounded", "legacy"):
        raise ConfigError("law must be 'bounded' or 'legacy'", cfg.source, field_name="adapt.law")
    cfg.sim_config()
    if cfg.vehicle:
        cfg.vehicle_params()
    return cfg


# ---------------------------------------------------------------------------
# loaders
# ---------------------------------------------------------------------------

def _ini_line_index(text):
    """(section, key) -> line number, and section -> header line number."""
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = n
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", s)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), n)
    return index


def loads_ini(text, source=None):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str      # keys are case-sensitive (K_q vs k_q)
    try:
        parser.read_string(text, source=str(source or "<config>"))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"syntax error: {exc.message if hasattr(exc, 'message') else exc}".splitlines()[0],
                          source, line) from None
    index = _ini_line_index(text)
    cfg = RunConfig(source=str(source) if source else None)
    for section in parser.sections():
        items = dict(parser.items(section))
        _apply_section(cfg, section, items, lambda key, s=section: index.get((s, key)))
    return _validate(cfg)


def from_dict(data, source=None):
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", source)
    if "config" in data and "manifest_version" in data:
        data = data["config"]
    cfg = RunConfig(source=str(source) if source else None)
    for top, body in data.items():
        if top in ("run", "sim", "sweep", "vehicle", "adapt"):
            if not isinstance(body, dict):
                raise ConfigError("expected an object", source, field_name=top)
            if top == "adapt":
                flat = {k: v for k, v in body.items() if not isinstance(v, dict)}
                _apply_section(cfg, "adapt", flat, lambda key: None)
                for chan, sub in body.items():
                    if isinstance(sub, dict):
                        _apply_section(cfg, f"adapt.{chan}", sub, lambda key: None)
            else:
                _apply_section(cfg, top, body, lambda key: None)
        elif top == "gains":
            if not isinstance(body, dict):
                raise ConfigError("expected an object", source, field_name="gains")
            for ctrl, groups in body.items():
                if not isinstance(groups, dict):
                    raise ConfigError("expected an object", source, field_name=f"gains.{ctrl}")
                for group, fields in groups.items():
                    if not isinstance(fields, dict):
                        raise ConfigError("expected an object", source, field_name=f"gains.{ctrl}.{group}")
                    _apply_section(cfg, f"gains.{ctrl}.{group}", fields, lambda key: None)
        else:
            raise ConfigError("unknown top-level key", source, field_name=top)
    return _validate(cfg)


def loads_json(text, source=None):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON syntax error: {exc.msg}", source, exc.lineno) from None
    return from_dict(data, source)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", path) from None
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return loads_json(text, path)
    return loads_ini(text, path)


def merged(cfg: RunConfig, **overrides):
    """Copy of ``cfg`` with the non-None ``overrides`` applied and re-validated."""
    out = copy.deepcopy(cfg)
    for key, val in overrides.items():
        if val is None:
            continue
        if key in ("trials", "deviation", "controllers", "workers"):
            out.sweep[key] = val
        else:
            setattr(out, key, val)
    return _validate(out)
