"""Experiment configuration: parsing, validation and defaults.

Configs are YAML documents with the sections ``pulse``, ``train``,
``system``, ``integrator``, ``sweep`` and ``output``. Which sections and keys
are allowed depends on the experiment; see ``docs/schema.md``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import yaml

from raptrain.pulses import parse_angle

EXPERIMENTS = ("continuous", "digitize", "compare", "error-sweep", "sideband-scan",
               "detuning-profile", "superposition")

_PULSE_KEYS = {"envelope", "area", "peak_rabi", "duration", "chirp", "carrier_offset"}
_TRAIN_KEYS = {"N", "r1", "r2", "period"}
_SYSTEM_KEYS = {"detunings", "sidebands", "couplings"}
_INTEGRATOR_KEYS = {"samples_per_subpulse", "steps_per_subpulse", "sample_count"}
_SWEEP_KEYS = {
    "error-sweep": {"N", "cases"},
    "sideband-scan": {"orders", "rescale"},
    "detuning-profile": {"orders", "span", "points"},
    "superposition": {"orders", "base_order", "kappa", "prefactor"},
}
_SECTIONS = {
    "continuous": {"pulse", "system", "integrator"},
    "digitize": {"pulse", "train"},
    "compare": {"pulse", "train", "system", "integrator"},
    "error-sweep": {"pulse", "train", "integrator", "sweep"},
    "sideband-scan": {"pulse", "train", "integrator", "sweep"},
    "detuning-profile": {"pulse", "train", "integrator", "sweep"},
    "superposition": {"pulse", "train", "integrator", "sweep"},
}
# experiments whose pulse section describes a long reference pulse
_REFERENCE = {"continuous", "digitize", "compare"}
# experiments driven by a constant-frequency comb train
_COMB = {"sideband-scan", "detuning-profile", "superposition"}

DEFAULT_SWEEP_CASES = (("pi", 291.6), ("5pi", 291.6), ("5pi", 64.8), ("5pi", 32.4))


class Code(str, enum.Enum):
    PARSE_ERROR = "parse-error"
    NOT_A_MAPPING = "not-a-mapping"
    UNKNOWN_EXPERIMENT = "unknown-experiment"
    EXPERIMENT_MISMATCH = "experiment-mismatch"
    UNKNOWN_SECTION = "unknown-section"
    UNKNOWN_KEY = "unknown-key"
    MISSING_KEY = "missing-key"
    EXCLUSIVE_KEYS = "exclusive-keys"
    INVALID_TYPE = "invalid-type"
    OUT_OF_RANGE = "out-of-range"


@dataclass(frozen=True)
class Diagnostic:
    code: Code
    field: str
    message: str
    line: Optional[int] = None

    def __str__(self):
        where = f"line {self.line}: " if self.line else ""
        return f"{where}{self.field or '<document>'}: {self.message} [{self.code.value}]"

    def to_dict(self):
        return {"code": self.code.value, "field": self.field, "message": self.message, "line": self.line}


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {d}" for d in self.diagnostics))


@dataclass
class ExperimentConfig:
    experiment: str
    pulse: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    system: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    output: Optional[str] = None
    applied_defaults: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _line_map(text: str) -> dict:
    lines: dict = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (str(k.value),)
                lines[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                lines[path + (i,)] = v.start_mark.line + 1
                walk(v, path + (i,))

    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, ())
    return lines


class _Validator:
    def __init__(self, text: str):
        self.lines = _line_map(text)
        self.errors: list[Diagnostic] = []
        self.defaults: list[str] = []

    def err(self, code, path, message):
        key = tuple(path)
        line = None
        while key and line is None:
            line = self.lines.get(key)
            key = key[:-1]
        self.errors.append(Diagnostic(code, ".".join(str(p) for p in path), message, line))

    def section(self, doc, name) -> Optional[dict]:
        sec = doc.get(name)
        if sec is None:
            return {}
        if not isinstance(sec, dict):
            self.err(Code.NOT_A_MAPPING, [name], "section must be a mapping")
            return None
        return sec

    def keys(self, sec, name, allowed):
        for k in sec:
            if k not in allowed:
                self.err(Code.UNKNOWN_KEY, [name, k], f"unknown key; allowed: {', '.join(sorted(allowed))}")

    def number(self, sec, name, key, default=None, *, minimum=None, positive=False,
               integer=False, angle=False, message=None):
        path = [name, key]
        if key not in sec:
            if default is not None:
                self.defaults.append(f"{name}.{key}")
            return default
        raw = sec[key]
        try:
            if isinstance(raw, bool):
                raise TypeError
            val = parse_angle(raw) if angle else raw
            if isinstance(val, str):
                # YAML 1.1 reads exponents without a sign ("1e8") as strings
                val = float(val)
                if integer and val.is_integer():
                    val = int(val)
            if integer:
                if isinstance(val, float) and val.is_integer():
                    val = int(val)
                if not isinstance(val, int):
                    raise TypeError
            else:
                if not isinstance(val, (int, float)):
                    raise TypeError
                val = float(val)
        except (TypeError, ValueError):
            kind = "an integer" if integer else "a number"
            self.err(Code.INVALID_TYPE, path, f"expected {kind}, got {raw!r}")
            return None
        if not math.isfinite(val):
            self.err(Code.OUT_OF_RANGE, path, "must be finite")
            return None
        if minimum is not None and val < minimum:
            self.err(Code.OUT_OF_RANGE, path, message or f"must be >= {minimum}, got {val}")
            return None
        if positive and not val > 0:
            self.err(Code.OUT_OF_RANGE, path, message or f"must be > 0, got {val}")
            return None
        return val

    def number_list(self, sec, name, key, default=None, *, integer=False, minimum=None):
        if key not in sec:
            if default is not None:
                self.defaults.append(f"{name}.{key}")
            return default
        raw = sec[key]
        if isinstance(raw, dict) and integer and set(raw) <= {"start", "stop", "step"} and {"start", "stop"} <= set(raw):
            tmp = {k: raw[k] for k in raw}
            start = self.number(tmp, name, "start", integer=True)
            stop = self.number(tmp, name, "stop", integer=True)
            step = self.number(tmp, name, "step", 1, integer=True, minimum=1)
            if None in (start, stop, step):
                return None
            return list(range(start, stop + 1, step))
        if not isinstance(raw, list) or not raw:
            self.err(Code.INVALID_TYPE, [name, key], "expected a non-empty list" +
                     (" or {start, stop, step}" if integer else ""))
            return None
        out = []
        for i, v in enumerate(raw):
            got = self.number({i: v}, name, i, integer=integer, minimum=minimum)
            if got is None:
                return None
            out.append(got)
        return out


def _pulse(v: _Validator, sec: dict, experiment: str) -> dict:
    v.keys(sec, "pulse", _PULSE_KEYS)
    out: dict[str, Any] = {}
    env = sec.get("envelope", "blackman")
    if "envelope" not in sec:
        v.defaults.append("pulse.envelope")
    if isinstance(env, str) and env.lower() in ("blackman", "gaussian"):
        out["envelope"] = env.lower()
    elif isinstance(env, dict) and set(env) == {"table"} and isinstance(env["table"], list):
        out["envelope"] = {"table": env["table"]}
        try:
            from raptrain.pulses import envelope_from_config

            envelope_from_config(out["envelope"])
        except (TypeError, ValueError) as exc:
            v.err(Code.INVALID_TYPE, ["pulse", "envelope"], f"invalid table envelope: {exc}")
    else:
        v.err(Code.INVALID_TYPE, ["pulse", "envelope"],
              "expected 'blackman', 'gaussian' or {table: [[fraction, amplitude], ...]}")
    out["duration"] = v.number(sec, "pulse", "duration", 1.0, positive=True)
    has_area, has_peak = "area" in sec, "peak_rabi" in sec
    if experiment in _REFERENCE:
        if has_area == has_peak:
            v.err(Code.EXCLUSIVE_KEYS, ["pulse"], "exactly one of 'area' or 'peak_rabi' must be given")
        out["chirp"] = v.number(sec, "pulse", "chirp", 0.0)
        out["carrier_offset"] = v.number(sec, "pulse", "carrier_offset", 0.0)
    else:
        for key in ("chirp", "carrier_offset"):
            if key in sec:
                v.err(Code.UNKNOWN_KEY, ["pulse", key], f"not used by {experiment}")
        if has_peak:
            v.err(Code.UNKNOWN_KEY, ["pulse", "peak_rabi"], f"{experiment} takes the carrier 'area' only")
    if has_area:
        out["area"] = v.number(sec, "pulse", "area", minimum=0.0, angle=True)
    elif has_peak:
        out["peak_rabi"] = v.number(sec, "pulse", "peak_rabi", minimum=0.0)
    elif experiment in _COMB:
        out["area"] = math.pi
        v.defaults.append("pulse.area")
    return out


def _train(v: _Validator, sec: dict, experiment: str) -> dict:
    v.keys(sec, "train", _TRAIN_KEYS)
    out = {
        "N": v.number(sec, "train", "N", 100, integer=True, minimum=2),
        "r1": v.number(sec, "train", "r1", 100.0, minimum=1.0, message="subpulses overlap: r1 must be ≥ 1"),
    }
    if experiment in _COMB:
        if "r2" in sec:
            v.err(Code.UNKNOWN_KEY, ["train", "r2"], f"not used by {experiment}")
        out["period"] = v.number(sec, "train", "period", 1.0, positive=True)
    else:
        if "period" in sec:
            v.err(Code.UNKNOWN_KEY, ["train", "period"], f"not used by {experiment}")
        out["r2"] = v.number(sec, "train", "r2", None, positive=True) if "r2" in sec else None
    return out


def _system(v: _Validator, sec: dict, experiment: str) -> dict:
    v.keys(sec, "system", _SYSTEM_KEYS)
    if "sidebands" in sec and experiment == "continuous":
        v.err(Code.UNKNOWN_KEY, ["system", "sidebands"], "sideband orders need a train; use 'detunings'")
        return {}
    if "detunings" in sec and "sidebands" in sec:
        v.err(Code.EXCLUSIVE_KEYS, ["system"], "give either 'detunings' or 'sidebands', not both")
        return {}
    out: dict[str, Any] = {}
    if "sidebands" in sec:
        out["sidebands"] = v.number_list(sec, "system", "sidebands", integer=True)
    else:
        out["detunings"] = v.number_list(sec, "system", "detunings", [0.0])
    m = len(out.get("sidebands") or out.get("detunings") or [0.0])
    out["couplings"] = v.number_list(sec, "system", "couplings", [1.0] * m, minimum=0.0)
    if out["couplings"] is not None and len(out["couplings"]) != m:
        v.err(Code.OUT_OF_RANGE, ["system", "couplings"], f"expected {m} coupling weights")
    return out


def _integrator(v: _Validator, sec: dict) -> dict:
    v.keys(sec, "integrator", _INTEGRATOR_KEYS)
    out = {
        "samples_per_subpulse": v.number(sec, "integrator", "samples_per_subpulse", 20, integer=True, minimum=2),
        "steps_per_subpulse": v.number(sec, "integrator", "steps_per_subpulse", 400, integer=True, minimum=2),
        "sample_count": v.number(sec, "integrator", "sample_count", 2001, integer=True, minimum=2),
    }
    sps, steps = out["samples_per_subpulse"], out["steps_per_subpulse"]
    if sps and steps and steps % sps:
        v.err(Code.OUT_OF_RANGE, ["integrator", "steps_per_subpulse"],
              "must be a multiple of samples_per_subpulse")
    return out


def _sweep(v: _Validator, sec: dict, experiment: str) -> dict:
    v.keys(sec, "sweep", _SWEEP_KEYS[experiment])
    out: dict[str, Any] = {}
    if experiment == "error-sweep":
        out["N"] = v.number_list(sec, "sweep", "N", [10, 20, 50, 100, 200, 500], integer=True, minimum=2)
        if "cases" not in sec:
            v.defaults.append("sweep.cases")
            out["cases"] = [{"area": parse_angle(a), "chirp": c} for a, c in DEFAULT_SWEEP_CASES]
        elif not isinstance(sec["cases"], list) or not sec["cases"]:
            v.err(Code.INVALID_TYPE, ["sweep", "cases"], "expected a non-empty list of {area, chirp}")
        else:
            out["cases"] = []
            for i, case in enumerate(sec["cases"]):
                name = f"sweep.cases.{i}"
                if not isinstance(case, dict):
                    v.err(Code.NOT_A_MAPPING, ["sweep", "cases", i], "each case must be a mapping")
                    continue
                for k in case:
                    if k not in ("area", "chirp"):
                        v.err(Code.UNKNOWN_KEY, ["sweep", "cases", i, k], "allowed: area, chirp")
                if "area" not in case:
                    v.err(Code.MISSING_KEY, ["sweep", "cases", i], "missing 'area'")
                    continue
                out["cases"].append({"area": v.number(case, name, "area", minimum=0.0, angle=True),
                                     "chirp": v.number(case, name, "chirp", 0.0)})
    elif experiment == "sideband-scan":
        out["orders"] = v.number_list(sec, "sweep", "orders", list(range(0, 301)), integer=True)
        out["rescale"] = _flag(v, sec, "rescale", False)
    elif experiment == "detuning-profile":
        out["orders"] = v.number_list(sec, "sweep", "orders", [0, 10, 100, 150, 200], integer=True)
        out["span"] = v.number(sec, "sweep", "span", 0.2, positive=True)
        out["points"] = v.number(sec, "sweep", "points", 41, integer=True, minimum=2)
    elif experiment == "superposition":
        out["orders"] = v.number_list(sec, "sweep", "orders", [5, 50, 150], integer=True)
        out["base_order"] = v.number(sec, "sweep", "base_order", 0, integer=True)
        out["kappa"] = v.number(sec, "sweep", "kappa", 1.0, positive=True)
        out["prefactor"] = _flag(v, sec, "prefactor", True)
    return out


def _flag(v: _Validator, sec: dict, key: str, default: bool):
    if key not in sec:
        v.defaults.append(f"sweep.{key}")
        return default
    if not isinstance(sec[key], bool):
        v.err(Code.INVALID_TYPE, ["sweep", key], "expected true or false")
        return None
    return sec[key]


def validate_config(text: str, experiment: Optional[str] = None) -> ExperimentConfig:
    """Parse and fully validate a YAML config; raise ``ConfigError`` listing every problem.

    ``experiment`` (e.g. from the command line) must agree with the
    document's own ``experiment`` key when both are present.
    """
    v = _Validator(text)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError([Diagnostic(Code.PARSE_ERROR, "", str(exc).replace("\n", " "),
                                      mark.line + 1 if mark else None)]) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError([Diagnostic(Code.NOT_A_MAPPING, "", "config must be a mapping of sections")])
    name = doc.get("experiment", experiment)
    if experiment is not None and "experiment" in doc and doc["experiment"] != experiment:
        v.err(Code.EXPERIMENT_MISMATCH, ["experiment"],
              f"config is for {doc['experiment']!r} but {experiment!r} was requested")
        raise ConfigError(v.errors)
    if name not in EXPERIMENTS:
        v.err(Code.UNKNOWN_EXPERIMENT, ["experiment"], f"expected one of {', '.join(EXPERIMENTS)}, got {name!r}")
        raise ConfigError(v.errors)
    allowed = _SECTIONS[name] | {"experiment", "output"}
    for key in doc:
        if key not in allowed:
            v.err(Code.UNKNOWN_SECTION, [key], f"not a section of {name}; allowed: {', '.join(sorted(allowed))}")
    cfg = ExperimentConfig(name)
    if name in _REFERENCE and "pulse" not in doc:
        v.err(Code.MISSING_KEY, ["pulse"], f"{name} needs a pulse section")
    builders = {"pulse": lambda s: _pulse(v, s, name), "train": lambda s: _train(v, s, name),
                "system": lambda s: _system(v, s, name), "integrator": lambda s: _integrator(v, s),
                "sweep": lambda s: _sweep(v, s, name)}
    for sec_name in sorted(_SECTIONS[name]):
        sec = v.section(doc, sec_name)
        if sec is not None:
            setattr(cfg, sec_name, builders[sec_name](sec))
    if "output" in doc:
        if not isinstance(doc["output"], str):
            v.err(Code.INVALID_TYPE, ["output"], "expected a directory path")
        else:
            cfg.output = doc["output"]
    if v.errors:
        raise ConfigError(v.errors)
    cfg.applied_defaults = sorted(set(v.defaults))
    return cfg
