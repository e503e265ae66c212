"""Command-line entry point: ``covertfading {simulate,calibrate,sweep,contour,bounds}``.

Every run resolves one configuration (preset, then ``--config`` file, then
flag overrides), computes everything in memory, and only then writes its
files, so a failing run leaves no partial output. A ``manifest.json`` with
the config hash, seed, worker count and wall-clock time accompanies the
data files.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, config as cfgmod
from .bounds import Direction, kl_report
from .detectors import (DetectorKind, LlrTable, calibrate, pd_threshold_analytic,
                        statistics_from_energies)
from .experiments import (_atomic_write, config_hash, contour_csv, format_table, run_contour,
                          run_sweep, sweep_csv)
from .model import sample_h0, sample_h1
from .parallel import derive_rng

OUT_DIR_ENV = "COVERTFADING_OUT_DIR"
EXIT_FAILED_CELLS = 1
EXIT_CONFIG = 2

# points where the two detectors disagree: (z1^2, z2^2)
CONTOUR_POINTS = ((4.8, 4.8), (9.0, 0.2))


class RunError(RuntimeError):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON config file; merged over the preset, if any")
    common.add_argument("--preset", metavar="NAME",
                        help=f"built-in configuration ({', '.join(sorted(cfgmod.PRESETS))})")
    common.add_argument("--seed", metavar="U64", type=int,
                        help="master seed (overrides master_seed in the config)")
    common.add_argument("--workers", metavar="N", type=int, default=1,
                        help="worker processes; changes runtime only, never output bytes")
    common.add_argument("--out-dir", metavar="PATH",
                        help=f"output directory (default: ${OUT_DIR_ENV} or ./out)")
    common.add_argument("--quadrature", choices=("window", "laguerre", "adaptive"),
                        help="block-LLR quadrature rule (default: window)")
    common.add_argument("--nodes", metavar="N", type=int,
                        help="quadrature node count (default: 64)")
    parser = argparse.ArgumentParser(
        prog="covertfading",
        description="Monte Carlo and bounds for covert-signal detection over block Rayleigh "
                    "fading.",
        epilog=f"Exit status: 0 on success, {EXIT_FAILED_CELLS} if any sweep cell or run step "
               f"failed, {EXIT_CONFIG} for a malformed config or bad arguments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "simulate": "draw H0/H1 slots and write all three detector statistics (simulate.csv)",
        "calibrate": "calibrate detector thresholds at the target false-alarm rate "
                     "(calibrate.csv)",
        "sweep": "P_E versus rho over a grid of n or block counts (sweep.csv)",
        "contour": "PD vs LRT decision regions on the (z1^2, z2^2) plane (contour*.csv)",
        "bounds": "divergence estimates, closed-form bounds and the P_E floor (bounds.csv)",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def resolve_config(args) -> dict:
    """Preset, then config file, then command-line overrides."""
    config = cfgmod.preset(args.preset) if args.preset else {}
    if args.config:
        config = cfgmod.merge(config, cfgmod.load_config(args.config))
    if not config:
        raise cfgmod.ConfigError("no configuration given; use --preset and/or --config")
    if args.seed is not None:
        config["master_seed"] = args.seed
    quad = dict(config.get("quadrature", {}))
    if args.quadrature:
        quad["method"] = args.quadrature
    if args.nodes is not None:
        quad["node_count"] = args.nodes
    if quad:
        config["quadrature"] = quad
    cfgmod.validate_keys(config)
    cfgmod.master_seed(config)
    cfgmod.quadrature(config)
    return config


def _meta(config: dict, command: str) -> dict:
    return {"command": command, "config_hash": config_hash(config),
            "master_seed": cfgmod.master_seed(config), "version": __version__}


# ---------------------------------------------------------------------------
# commands: each returns ({filename: text}, failed cell descriptions, summary lines)


def cmd_simulate(config: dict, workers: int = 1, log=None):
    params = cfgmod.scenario(config)
    sec = config.get("simulate", {})
    trials = cfgmod.number(sec, "simulate", "trials", int, 1000, positive=True)
    spec = cfgmod.quadrature(config)
    seed = cfgmod.master_seed(config)
    llr = LlrTable(params, spec)
    kinds = tuple(DetectorKind)
    rows = []
    for label, draw in (("h0", sample_h0), ("h1", lambda p, r: sample_h1(p, r)[0])):
        rng = derive_rng(seed, "simulate", label)
        energies = np.array([draw(params, rng).block_energies for _ in range(trials)])
        stats = [statistics_from_energies(k, energies, params, llr) for k in kinds]
        rows += [(t, label, *(float(s[t]) for s in stats)) for t in range(trials)]
    text = format_table(("trial", "hypothesis", *(k.value for k in kinds)), rows,
                        {**_meta(config, "simulate"), "params": params.fingerprint()})
    return {"simulate.csv": text}, [], [f"simulated {trials} slots per hypothesis"]


def cmd_calibrate(config: dict, workers: int = 1, log=None):
    params = cfgmod.scenario(config)
    sec = config.get("calibrate", {})
    pfa = cfgmod.number(sec, "calibrate", "target_pfa", float, 0.01, positive=True)
    trials = cfgmod.number(sec, "calibrate", "trials", int, 10_000, positive=True)
    kinds = cfgmod.detectors(sec, "calibrate", ["lrt", "power", "mean_threshold"])
    spec = cfgmod.quadrature(config)
    seed = cfgmod.master_seed(config)
    rows, summary = [], []
    for kind in kinds:
        try:
            det = calibrate(kind, params, pfa, trials, derive_rng(seed, "calibrate", kind.value),
                            spec, workers)
        except ValueError as exc:
            raise RunError(f"calibrate {kind.value}: {exc}") from exc
        exact = pd_threshold_analytic(params, pfa) if kind is DetectorKind.POWER else math.nan
        rows.append((kind.value, det.threshold, det.target_pfa, det.calibration_trials,
                     det.calibration_seed, det.params_fingerprint, exact))
        summary.append(f"{kind.value}: threshold {det.threshold:.6g}"
                       + (f" (exact {exact:.6g})" if not math.isnan(exact) else ""))
    columns = ("detector", "threshold", "target_pfa", "calibration_trials", "calibration_seed",
               "params_fingerprint", "analytic_threshold")
    return {"calibrate.csv": format_table(columns, rows, _meta(config, "calibrate"))}, [], summary


def cmd_sweep(config: dict, workers: int = 1, log=None):
    cfg = cfgmod.sweep(config)
    rows = run_sweep(cfg, workers, log)
    failed = [f"{r.cell_key} {r.detector}: {r.status}" for r in rows if not r.ok]
    summary = [f"{len(rows)} rows, {len(failed)} failed"]
    return {"sweep.csv": sweep_csv(rows, _meta(config, "sweep"))}, failed, summary


def cmd_contour(config: dict, workers: int = 1, log=None):
    params = cfgmod.scenario(config)
    sec = config.get("contour", {})
    try:
        grid = run_contour(
            params,
            axis_max=cfgmod.number(sec, "contour", "axis_max", float, 12.0, positive=True),
            step=cfgmod.number(sec, "contour", "step", float, 0.2, positive=True),
            target_pfa=cfgmod.number(sec, "contour", "target_pfa", float, 0.01, positive=True),
            calibration_trials=cfgmod.number(sec, "contour", "calibration_trials", int,
                                             1_000_000, positive=True),
            master_seed=cfgmod.master_seed(config), spec=cfgmod.quadrature(config))
    except cfgmod.ConfigError:
        raise
    except ValueError as exc:
        raise RunError(f"contour: {exc}") from exc
    meta = _meta(config, "contour")
    points = []
    for z1, z2 in CONTOUR_POINTS:
        c = grid.classify(z1, z2)
        label = {(True, False): "pd_only", (False, True): "lrt_only"}.get(
            (c["pd"], c["lrt"]), "agree")
        points.append((z1, z2, c["power"], c["lambda_llr"], c["pd"], c["lrt"], label))
    files = {
        "contour.csv": contour_csv(grid, meta),
        "contour_points.csv": format_table(
            ("z1_sq", "z2_sq", "power", "lambda_llr", "pd_accept", "lrt_accept", "label"),
            points, {**meta, "pd_threshold": f"{grid.pd_threshold:.9g}",
                     "lrt_threshold": f"{grid.lrt_threshold:.9g}"}),
        "contour_level_set.csv": format_table(("z1_sq", "z2_sq"), grid.level_set, meta),
    }
    summary = [f"PD threshold {grid.pd_threshold:.6g} (calibrated "
               f"{grid.pd_threshold_calibrated:.6g}), LRT threshold {grid.lrt_threshold:.6g}"]
    summary += [f"({p[0]:g}, {p[1]:g}): PD {'accept' if p[4] else 'reject'}, "
                f"LRT {'accept' if p[5] else 'reject'} -> {p[6]}" for p in points]
    return files, [], summary


def cmd_bounds(config: dict, workers: int = 1, log=None):
    params = cfgmod.scenario(config)
    sec = config.get("bounds", {})
    samples = cfgmod.number(sec, "bounds", "samples", int, 100_000, positive=True)
    direction = sec.get("direction", "f0_f1")
    try:
        direction = Direction(direction)
        report = kl_report(params, samples, derive_rng(cfgmod.master_seed(config), "bounds"),
                           cfgmod.quadrature(config), direction)
    except ValueError as exc:
        raise cfgmod.ConfigError(f"bounds: {exc}") from exc
    quantities = [
        ("num_blocks", report.num_blocks),
        ("d_f1_f0_mc", report.d_f1_f0_mc), ("d_f1_f0_stderr", report.d_f1_f0_stderr),
        ("d_f0_f1_mc", report.d_f0_f1_mc), ("d_f0_f1_stderr", report.d_f0_f1_stderr),
        ("bound_ei", report.bound_ei), ("bound_simple", report.bound_simple),
        ("bound_quartic", report.bound_quartic),
        ("slot_d_f1_f0", report.slot_d_f1_f0), ("slot_d_f0_f1", report.slot_d_f0_f1),
        ("slot_bound_ei", report.slot_bound_ei), ("slot_bound_simple", report.slot_bound_simple),
        ("direction", report.direction.value), ("pe_floor", report.pe_floor),
    ]
    text = format_table(("quantity", "value"), quantities,
                        {**_meta(config, "bounds"), "params": params.fingerprint()})
    summary = [f"{k:>18} = {v:.9g}" if isinstance(v, float) else f"{k:>18} = {v}"
               for k, v in quantities]
    return {"bounds.csv": text}, [], summary


COMMANDS = {"simulate": cmd_simulate, "calibrate": cmd_calibrate, "sweep": cmd_sweep,
            "contour": cmd_contour, "bounds": cmd_bounds}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    log = lambda line: print(line, file=sys.stderr, flush=True)
    if args.workers < 1:
        log("error: --workers must be at least 1")
        return EXIT_CONFIG
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV) or "out"
    try:
        config = resolve_config(args)
        files, failed, summary = COMMANDS[args.command](config, args.workers, log)
    except cfgmod.ConfigError as exc:
        log(f"config error: {exc}")
        return EXIT_CONFIG
    except (RunError, ArithmeticError) as exc:
        log(f"error: {exc}")
        return EXIT_FAILED_CELLS

    for name, text in files.items():
        _atomic_write(os.path.join(out_dir, name), text)
    manifest = {
        "tool": "covertfading", "version": __version__, "command": args.command,
        "config_hash": config_hash(config), "master_seed": cfgmod.master_seed(config),
        "workers": args.workers, "wall_clock_seconds": round(time.time() - started, 3),
        "outputs": {args.command: sorted(files)}, "failed_cells": failed, "config": config,
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for line in summary:
        print(line)
    if failed:
        log(f"{len(failed)} cell(s) failed:")
        for line in failed:
            log(f"  {line}")
        return EXIT_FAILED_CELLS
    return 0


if __name__ == "__main__":
    sys.exit(main())
