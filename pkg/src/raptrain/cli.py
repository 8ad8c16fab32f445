"""Command-line experiment runner.

    raptrain <experiment> --config <file> [--out <dir>] [--threads <k>]

Every run writes one results table and ``manifest.json`` into the output
directory. Exit status: 0 on success, 2 for configuration errors, 3 when a
propagation fails its numerical checks.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from raptrain import __version__
from raptrain.config import EXPERIMENTS, ConfigError, ExperimentConfig, validate_config
from raptrain.digitizer import PulseTrain, comb_train, digitize_matched, digitize_scaled, verify_matching, write_train_csv
from raptrain.dynamics import IntegrationError, LevelSystem, propagate_continuous, propagate_train
from raptrain.metrics import final_yield, integrated_population_error, peak_aligned_map, superposition_ratio
from raptrain.pulses import ContinuousPulse, envelope_from_config, pulse_from_config
from raptrain.spectrum import (
    predicted_superposition_ratio,
    sideband_ratio,
    superposition_prefactor,
    tooth_frequency,
)
from raptrain.tables import write_table

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
DEFAULT_OUT = "raptrain-out"
MANIFEST = "manifest.json"
# below this sideband ratio a rescaled amplitude is meaningless
_MIN_RATIO = 1e-8


@dataclass
class Result:
    table: str
    header: Sequence[str]
    rows: list
    summary: dict = field(default_factory=dict)
    writer: Optional[Callable[[Path], Path]] = None


def _map(fn, items, threads):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _pulse(cfg: ExperimentConfig, **override) -> ContinuousPulse:
    sec = {k: v for k, v in cfg.pulse.items() if v is not None}
    sec.update(override)
    return pulse_from_config(sec)


def _digitize(cfg: ExperimentConfig, pulse: ContinuousPulse, n: Optional[int] = None) -> PulseTrain:
    n = cfg.train["N"] if n is None else n
    if cfg.train.get("r2") is not None:
        return digitize_scaled(pulse, n, cfg.train["r1"], cfg.train["r2"])
    return digitize_matched(pulse, n, cfg.train["r1"])


def _comb(cfg: ExperimentConfig) -> PulseTrain:
    return comb_train(cfg.train["N"], cfg.train["r1"], cfg.train["period"], cfg.pulse["area"],
                      envelope=envelope_from_config(cfg.pulse["envelope"]))


def _system(cfg: ExperimentConfig, train: Optional[PulseTrain] = None) -> LevelSystem:
    sec = cfg.system or {"detunings": [0.0]}
    if sec.get("sidebands") is not None:
        det = [tooth_frequency(train, n) for n in sec["sidebands"]]
    else:
        det = sec["detunings"]
    return LevelSystem(tuple(det), tuple(sec["couplings"]) if sec.get("couplings") else None)


def _train_traj(train, system, cfg):
    integ = cfg.integrator
    return propagate_train(train, system, integ["samples_per_subpulse"],
                           steps_per_subpulse=integ["steps_per_subpulse"])


def _map_for(train: PulseTrain):
    return peak_aligned_map(train) if train.regime == "scaled" else None


def run_continuous(cfg: ExperimentConfig, threads: int) -> Result:
    traj = propagate_continuous(_pulse(cfg), _system(cfg), cfg.integrator["sample_count"])
    return Result("trajectory.csv", traj.header(), list(traj.rows()),
                  {"final_populations": traj.final_populations.tolist()})


def run_digitize(cfg: ExperimentConfig, threads: int) -> Result:
    pulse = _pulse(cfg)
    train = _digitize(cfg, pulse)
    rep = verify_matching(train)
    summary = {"tau": train.tau, "period": train.period, "spacing": train.spacing, "regime": train.regime,
               "max_area_residual": rep.max_area_residual, "max_phase_residual": rep.max_phase_residual}
    return Result("train.csv", (), [], summary, writer=lambda p: write_train_csv(train, p))


def _compare(cfg, pulse, train, system):
    cont = propagate_continuous(pulse, system, cfg.integrator["sample_count"])
    trt = _train_traj(train, system, cfg)
    return cont, trt


def run_compare(cfg: ExperimentConfig, threads: int) -> Result:
    pulse = _pulse(cfg)
    train = _digitize(cfg, pulse)
    system = _system(cfg, train)
    cont, trt = _compare(cfg, pulse, train, system)
    tmap = _map_for(train)
    t_train = trt.times if tmap is None else tmap(trt.times)
    pt = np.column_stack([np.interp(cont.times, t_train, trt.populations[:, j]) for j in range(system.dim)])
    header = (["time"] + [f"P{j}_continuous" for j in range(system.dim)]
              + [f"P{j}_train" for j in range(system.dim)])
    rows = [[t, *pc, *ptr] for t, pc, ptr in zip(cont.times, cont.populations, pt)]
    summary = {"sigma_P": integrated_population_error(cont, trt, tmap),
               "final_populations_continuous": cont.final_populations.tolist(),
               "final_populations_train": trt.final_populations.tolist(),
               "max_norm_error": float(max(np.max(np.abs(cont.norms - 1)), np.max(np.abs(trt.norms - 1))))}
    return Result("compare.csv", header, rows, summary)


def run_error_sweep(cfg: ExperimentConfig, threads: int) -> Result:
    cases = cfg.sweep["cases"]
    pulses = [_pulse(cfg, area=c["area"], chirp=c["chirp"]) for c in cases]
    conts = _map(lambda p: propagate_continuous(p, LevelSystem(), cfg.integrator["sample_count"]), pulses, threads)
    points = [(i, n) for i in range(len(cases)) for n in sorted(cfg.sweep["N"])]

    def one(pt):
        i, n = pt
        train = _digitize(cfg, pulses[i], n)
        trt = _train_traj(train, LevelSystem(), cfg)
        return integrated_population_error(conts[i], trt, _map_for(train)), final_yield(trt)

    out = _map(one, points, threads)
    r2 = cfg.train.get("r2")
    rows = [(cases[i]["area"], cases[i]["chirp"], n, cfg.train["r1"], math.nan if r2 is None else r2,
             sig, final_yield(conts[i]), p1) for (i, n), (sig, p1) in zip(points, out)]
    header = ("area", "chirp", "N", "r1", "r2", "sigma_P", "final_P1_continuous", "final_P1_train")
    return Result("error_sweep.csv", header, rows)


def _tooth_run(template, carrier, scale, system, cfg):
    train = template.with_carrier(carrier, scale)
    return propagate_train(train, system, 2, steps_per_subpulse=cfg.integrator["steps_per_subpulse"])


def run_sideband_scan(cfg: ExperimentConfig, threads: int) -> Result:
    template = _comb(cfg)
    orders = cfg.sweep["orders"]
    rescale = cfg.sweep["rescale"]

    def one(n):
        ratio = sideband_ratio(template, n)
        predicted = math.sin(0.5 * math.pi * ratio) ** 2
        if rescale and ratio < _MIN_RATIO:
            return ratio, predicted, math.nan, math.nan
        scale = 1.0 / ratio if rescale else 1.0
        traj = _tooth_run(template, tooth_frequency(template, n), scale, LevelSystem(), cfg)
        return ratio, predicted, scale, final_yield(traj)

    out = _map(one, orders, threads)
    rows = [(n, tooth_frequency(template, n), *vals) for n, vals in zip(orders, out)]
    header = ("n", "detuning", "F_ratio", "predicted_yield", "amplitude_scale", "simulated_yield")
    return Result("sideband_scan.csv", header, rows,
                  {"tau": template.tau, "spacing": template.spacing, "rescale": rescale})


def run_detuning_profile(cfg: ExperimentConfig, threads: int) -> Result:
    template = _comb(cfg)
    fractions = np.linspace(-cfg.sweep["span"], cfg.sweep["span"], cfg.sweep["points"])
    tooth = 2 * math.pi / template.spacing
    points = [(n, float(f)) for n in cfg.sweep["orders"] for f in fractions]

    def one(pt):
        n, f = pt
        ratio = sideband_ratio(template, n)
        if ratio < _MIN_RATIO:
            return math.nan
        traj = _tooth_run(template, tooth_frequency(template, n) + f * tooth, 1.0 / ratio, LevelSystem(), cfg)
        return final_yield(traj)

    ys = _map(one, points, threads)
    rows = [(n, f, f * tooth, tooth_frequency(template, n) + f * tooth, y) for (n, f), y in zip(points, ys)]
    header = ("n", "offset_fraction", "offset", "detuning", "yield")
    # largest pointwise departure of each profile from the first one
    first = np.array([y for (n, _), y in zip(points, ys) if n == points[0][0]])
    spread = {}
    for n in cfg.sweep["orders"]:
        prof = np.array([y for (m, _), y in zip(points, ys) if m == n])
        spread[str(n)] = float(np.max(np.abs(prof - first)))
    return Result("detuning_profile.csv", header, rows, {"max_deviation_from_first": spread})


def run_superposition(cfg: ExperimentConfig, threads: int) -> Result:
    template = _comb(cfg)
    m, kappa = cfg.sweep["base_order"], cfg.sweep["kappa"]

    def one(n):
        f = superposition_prefactor(template, n, m) if cfg.sweep["prefactor"] else 1.0
        system = LevelSystem((tooth_frequency(template, m), tooth_frequency(template, n)))
        traj = _tooth_run(template, 0.0, kappa / f, system, cfg)
        return f, traj.final_populations, superposition_ratio(traj)

    orders = cfg.sweep["orders"]
    out = _map(one, orders, threads)
    rows = []
    for n, (f, p, ratio) in zip(orders, out):
        target = predicted_superposition_ratio(template, n, m)
        rows.append((n, m, kappa, sideband_ratio(template, n), f, target, *p, ratio, ratio / target - 1))
    header = ("n", "base_order", "kappa", "F_ratio", "prefactor", "predicted_ratio",
              "P0", "P1", "P2", "simulated_ratio", "relative_error")
    return Result("superposition.csv", header, rows)


RUNNERS = {
    "continuous": run_continuous,
    "digitize": run_digitize,
    "compare": run_compare,
    "error-sweep": run_error_sweep,
    "sideband-scan": run_sideband_scan,
    "detuning-profile": run_detuning_profile,
    "superposition": run_superposition,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def run_experiment(cfg: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Run a validated experiment; write its table and manifest into ``out_dir``.

    Nothing is written if the computation raises.
    """
    start = time.perf_counter()
    result = RUNNERS[cfg.experiment](cfg, max(1, int(threads)))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = out / result.table
    if result.writer is not None:
        result.writer(table)
    else:
        write_table(table, result.header, result.rows)
    manifest = {
        "tool": "raptrain",
        "version": __version__,
        "experiment": cfg.experiment,
        "config": {k: v for k, v in cfg.to_dict().items() if k != "applied_defaults"},
        "applied_defaults": list(cfg.applied_defaults),
        "threads": int(threads),
        "outputs": {result.table: {"sha256": _sha256(table)}},
        "summary": result.summary,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_clock_seconds": time.perf_counter() - start,
    }
    (out / MANIFEST).write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raptrain", description="Digitized adiabatic passage experiments.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="YAML experiment config")
    parser.add_argument("--out", help=f"output directory (default: config 'output' or ./{DEFAULT_OUT})")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweep points")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = validate_config(text, args.experiment)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"error: {args.config}:{d}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or cfg.output
    if out_dir is None:
        out_dir = DEFAULT_OUT
        cfg.applied_defaults = sorted([*cfg.applied_defaults, "output"])
    cfg.output = str(out_dir)
    try:
        manifest = run_experiment(cfg, out_dir, args.threads)
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    table = next(iter(manifest["outputs"]))
    print(f"{cfg.experiment}: wrote {Path(out_dir) / table} ({manifest['wall_clock_seconds']:.2f} s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
