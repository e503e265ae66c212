"""Phase-transition sweeps, the block-size sweep, and the PD-vs-LRT contour.

Each sweep cell (n, M, rho) draws from streams derived from the master seed
and the cell coordinates, so output is identical for any worker count. All
detectors in a cell share the same calibration and evaluation streams.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .detectors import (DetectorKind, LlrTable, block_llr, calibrate, estimate_errors,
                        pd_threshold_analytic)
from .model import Field, SystemParams
from .numerics import DEFAULT_QUADRATURE, QuadratureSpec
from .parallel import derive_rng, worker_map


def config_hash(config: dict) -> str:
    """sha256 of the canonical JSON form; insensitive to key order."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class SweepConfig:
    """Grid of scenarios with alice_power = c * n**(-rho).

    ``mode == "phase"`` varies n over ``n_values`` with fixed ``block_len``;
    ``mode == "block"`` fixes ``n`` and varies ``block_counts``.
    """

    rho_grid: tuple
    c: float
    fading_rate: float
    mode: str = "phase"
    n_values: tuple = ()
    block_len: int = 1
    n: int = 1000
    block_counts: tuple = ()
    noise_var: float = 1.0
    field: Field = Field.COMPLEX
    target_pfa: float = 0.01
    trials: int = 10_000
    calibration_trials: int = 10_000
    detectors: tuple = (DetectorKind.LRT,)
    master_seed: int = 0
    quadrature: QuadratureSpec = DEFAULT_QUADRATURE

    def __post_init__(self):
        object.__setattr__(self, "rho_grid", tuple(float(r) for r in self.rho_grid))
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "block_counts", tuple(int(v) for v in self.block_counts))
        object.__setattr__(self, "detectors", tuple(DetectorKind(d) for d in self.detectors))
        object.__setattr__(self, "field", Field(self.field))
        if self.mode not in ("phase", "block"):
            raise ValueError(f"mode must be 'phase' or 'block', got {self.mode!r}")
        if not self.rho_grid:
            raise ValueError("rho_grid must be nonempty")
        if any(not 0 < r < 1 for r in self.rho_grid) or list(self.rho_grid) != sorted(self.rho_grid):
            raise ValueError("rho_grid must be ascending values in (0, 1)")
        if self.mode == "phase" and not self.n_values:
            raise ValueError("phase sweeps need n_values")
        if self.mode == "block" and not self.block_counts:
            raise ValueError("block sweeps need block_counts")
        if self.trials < 1000:
            raise ValueError("trials must be >= 1000")
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.detectors:
            raise ValueError("at least one detector is required")

    def cells(self) -> list[tuple[int, int, float]]:
        """(n, num_blocks, rho) in output order."""
        if self.mode == "phase":
            shapes = [(n, n // self.block_len) for n in self.n_values]
        else:
            shapes = [(self.n, m) for m in self.block_counts]
        return [(n, m, rho) for n, m in shapes for rho in self.rho_grid]

    def params_for(self, n: int, num_blocks: int, rho: float) -> SystemParams:
        return SystemParams(n=n, num_blocks=num_blocks, fading_rate=self.fading_rate,
                            noise_var=self.noise_var, alice_power=self.c * n ** (-rho),
                            field=self.field)


@dataclass(frozen=True)
class SweepRow:
    n: int
    M: int
    B: int
    rho: float
    sigma_a2: float
    detector: str
    threshold: float
    p_fa: float
    p_md: float
    p_e: float
    half_width_fa: float
    half_width_md: float
    master_seed: int
    cell_key: str
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


SWEEP_COLUMNS = tuple(f.name for f in dataclasses.fields(SweepRow))


def _cell_key(n, m, rho):
    return f"{n}:{m}:{rho!r}"


def run_cell(cfg: SweepConfig, n: int, num_blocks: int, rho: float) -> list[SweepRow]:
    """Calibrate and evaluate every configured detector at one grid point."""
    key = _cell_key(n, num_blocks, rho)
    rows = []
    try:
        params = cfg.params_for(n, num_blocks, rho)
    except ValueError as exc:
        return [_failed_row(cfg, n, num_blocks, rho, kind, key, exc) for kind in cfg.detectors]
    llr = None
    for kind in cfg.detectors:
        try:
            if kind is DetectorKind.LRT and llr is None:
                llr = LlrTable(params, cfg.quadrature)
            det = calibrate(kind, params, cfg.target_pfa, cfg.calibration_trials,
                            derive_rng(cfg.master_seed, "calibrate", n, num_blocks, rho),
                            cfg.quadrature, llr=llr if kind is DetectorKind.LRT else None)
            est = estimate_errors(det, params, cfg.trials,
                                  derive_rng(cfg.master_seed, "evaluate", n, num_blocks, rho),
                                  cfg.quadrature, llr=llr if kind is DetectorKind.LRT else None)
        except (ValueError, ArithmeticError) as exc:
            rows.append(_failed_row(cfg, n, num_blocks, rho, kind, key, exc))
            continue
        rows.append(SweepRow(n, num_blocks, params.block_len, rho, params.alice_power, kind.value,
                             det.threshold, est.p_fa, est.p_md, est.p_e, est.half_width_fa,
                             est.half_width_md, cfg.master_seed, key))
    return rows


def _failed_row(cfg, n, m, rho, kind, key, exc):
    nan = math.nan
    b = n // m if m else 0
    return SweepRow(n, m, b, rho, cfg.c * n ** (-rho), DetectorKind(kind).value, nan, nan, nan,
                    nan, nan, nan, cfg.master_seed, key,
                    f"failed: {type(exc).__name__}: {exc}".replace("\n", " "))


def run_sweep(cfg: SweepConfig, workers: int = 1, log=None) -> list[SweepRow]:
    jobs = [(cfg, n, m, rho) for n, m, rho in cfg.cells()]
    if log is None:
        results = worker_map(run_cell, jobs, workers)
    else:
        results = []
        for part in _chunks(jobs, max(1, workers)):
            for job, rows in zip(part, worker_map(run_cell, part, workers)):
                for row in rows:
                    log(f"cell n={row.n} M={row.M} rho={row.rho:g} {row.detector}: "
                        f"p_e={row.p_e:.4f} [{row.status}]")
                results.append(rows)
    return [row for rows in results for row in rows]


def _chunks(seq, size):
    for i in range(0, len(seq), size):
        yield seq[i:i + size]


def run_phase_sweep(cfg: SweepConfig, workers: int = 1, log=None) -> list[SweepRow]:
    """P_E versus rho for each n (fixed block length)."""
    if cfg.mode != "phase":
        cfg = dataclasses.replace(cfg, mode="phase")
    return run_sweep(cfg, workers, log)


def run_block_sweep(cfg: SweepConfig, workers: int = 1, log=None) -> list[SweepRow]:
    """P_E versus rho at fixed n for each block count."""
    if cfg.mode != "block":
        cfg = dataclasses.replace(cfg, mode="block")
    return run_sweep(cfg, workers, log)


# ---------------------------------------------------------------------------
# curve summaries


def curves(rows: Sequence[SweepRow], detector: str = "lrt") -> dict:
    """{(n, M): (rho array, p_e array)} for one detector, successful rows only."""
    out: dict = {}
    for row in rows:
        if row.detector == detector and row.ok:
            out.setdefault((row.n, row.M), []).append((row.rho, row.p_e))
    return {k: tuple(np.array(v) for v in zip(*sorted(pts))) for k, pts in out.items()}


def max_adjacent_jump(rho, p_e) -> float:
    """Largest increase of P_E between neighbouring rho values."""
    return float(np.max(np.diff(np.asarray(p_e)))) if len(p_e) > 1 else 0.0


def crossing_rho(rho, p_e, level: float = 0.5) -> float:
    """First rho whose P_E exceeds ``level`` (nan if none)."""
    above = np.nonzero(np.asarray(p_e) > level)[0]
    return float(np.asarray(rho)[above[0]]) if above.size else math.nan


# ---------------------------------------------------------------------------
# contour


@dataclass
class ContourGrid:
    """Decision regions of the power detector and the LRT over (z1^2, z2^2)."""

    z1_sq: np.ndarray
    z2_sq: np.ndarray
    lambda_llr: np.ndarray
    pd_threshold: float
    pd_threshold_calibrated: float
    lrt_threshold: float
    target_pfa: float
    calibration_trials: int
    master_seed: int
    level_set: np.ndarray
    pd_accept: np.ndarray = field(init=False)
    lrt_accept: np.ndarray = field(init=False)
    params: SystemParams | None = None
    spec: QuadratureSpec = DEFAULT_QUADRATURE

    def __post_init__(self):
        zz1, zz2 = np.meshgrid(self.z1_sq, self.z2_sq, indexing="ij")
        self.pd_accept = (zz1 + zz2) > self.pd_threshold
        self.lrt_accept = self.lambda_llr > self.lrt_threshold

    @property
    def disagreement(self) -> np.ndarray:
        labels = np.full(self.lambda_llr.shape, "agree", dtype=object)
        labels[self.pd_accept & ~self.lrt_accept] = "pd_only"
        labels[~self.pd_accept & self.lrt_accept] = "lrt_only"
        return labels

    def classify(self, z1_sq: float, z2_sq: float) -> dict:
        """Decisions of both tests at an arbitrary point (True = accept H1)."""
        lam = float(np.sum(block_llr(np.array([z1_sq, z2_sq]), self.params, self.spec)))
        return {"pd": z1_sq + z2_sq > self.pd_threshold, "lrt": lam > self.lrt_threshold,
                "lambda_llr": lam, "power": z1_sq + z2_sq}


FIG5_PARAMS = SystemParams(n=2, num_blocks=2, fading_rate=1.0, noise_var=1.0, alice_power=1.0,
                           field=Field.REAL)


def run_contour(params: SystemParams = FIG5_PARAMS, axis_max: float = 12.0, step: float = 0.2,
                target_pfa: float = 0.01, calibration_trials: int = 1_000_000,
                master_seed: int = 0, spec: QuadratureSpec = DEFAULT_QUADRATURE) -> ContourGrid:
    """Evaluate Lambda(z1^2, z2^2) on a grid and both decision boundaries.

    The power detector uses the exact gamma threshold; its Monte Carlo
    calibration is recorded alongside as a cross-check. The LRT threshold is
    the Monte Carlo (1 - target_pfa) quantile of Lambda under H0.
    """
    if params.num_blocks != 2 or params.block_len != 1:
        raise ValueError("the contour is defined for two single-sample blocks")
    count = int(round(axis_max / step))
    axis = np.round(np.arange(count + 1) * step, 10)
    per_block = block_llr(axis, params, spec)
    lam = per_block[:, None] + per_block[None, :]
    llr = LlrTable(params, spec)
    lrt = calibrate(DetectorKind.LRT, params, target_pfa, calibration_trials,
                    derive_rng(master_seed, "contour", "lrt"), spec, llr=llr)
    pd_cal = calibrate(DetectorKind.POWER, params, target_pfa, calibration_trials,
                       derive_rng(master_seed, "contour", "power"), spec)
    level = lrt_level_set(params, lrt.threshold, axis, spec)
    return ContourGrid(axis, axis.copy(), lam, pd_threshold_analytic(params, target_pfa),
                       pd_cal.threshold, lrt.threshold, target_pfa, calibration_trials,
                       master_seed, level, params=params, spec=spec)


def lrt_level_set(params: SystemParams, threshold: float, z1_axis,
                  spec: QuadratureSpec = DEFAULT_QUADRATURE) -> np.ndarray:
    """Points (z1^2, z2^2) with llr(z1^2) + llr(z2^2) = threshold.

    Assumes the block LLR increases with energy; columns with no crossing
    are skipped.
    """
    pts = []
    f = lambda s, target: block_llr(s, params, spec) - target
    for z1 in np.asarray(z1_axis, dtype=float):
        target = threshold - block_llr(z1, params, spec)
        if f(0.0, target) > 0:
            continue
        hi = 1.0
        while f(hi, target) < 0:
            hi *= 2.0
            if hi > 1e6:
                break
        else:
            pts.append((z1, optimize.brentq(f, 0.0, hi, args=(target,), xtol=1e-12)))
    return np.array(pts).reshape(-1, 2)


def level_set_bow(level_set: np.ndarray) -> float:
    """Largest distance from the level set to the chord joining its ends."""
    if len(level_set) < 3:
        return 0.0
    a, b = level_set[0], level_set[-1]
    d = b - a
    normal = np.array([-d[1], d[0]]) / np.hypot(*d)
    return float(np.max(np.abs((level_set - a) @ normal)))


# ---------------------------------------------------------------------------
# CSV I/O


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def _header(meta: dict) -> list[str]:
    return [f"# {k}={v}" for k, v in meta.items()]


def _atomic_write(path, text: str):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_table(columns, rows, meta: dict) -> str:
    buf = io.StringIO()
    for line in _header(meta):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_table(path):
    """Return (meta dict from '#' lines, column names, list of string rows)."""
    meta, lines = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    return meta, columns, [r for r in reader if r]


def sweep_csv(rows: Sequence[SweepRow], meta: dict) -> str:
    return format_table(SWEEP_COLUMNS, [dataclasses.astuple(r) for r in rows], meta)


def write_sweep_csv(path, rows: Sequence[SweepRow], meta: dict):
    _atomic_write(path, sweep_csv(rows, meta))


def read_sweep_csv(path) -> tuple[dict, list[SweepRow]]:
    meta, columns, raw = read_table(path)
    if tuple(columns) != SWEEP_COLUMNS:
        raise ValueError(f"unexpected sweep columns {columns}")
    types = [f.type for f in dataclasses.fields(SweepRow)]
    conv = {"int": int, "float": float, "str": str}
    rows = [SweepRow(*(conv[t](v) for t, v in zip(types, r))) for r in raw]
    return meta, rows


CONTOUR_COLUMNS = ("z1_sq", "z2_sq", "lambda_llr", "pd_accept", "lrt_accept")


def contour_meta(grid: ContourGrid) -> dict:
    return {"pd_threshold": _fmt(grid.pd_threshold),
            "pd_threshold_calibrated": _fmt(grid.pd_threshold_calibrated),
            "lrt_threshold": _fmt(grid.lrt_threshold),
            "target_pfa": _fmt(grid.target_pfa),
            "calibration_trials": grid.calibration_trials}


def contour_csv(grid: ContourGrid, meta: dict) -> str:
    rows = []
    for i, z1 in enumerate(grid.z1_sq):
        for j, z2 in enumerate(grid.z2_sq):
            rows.append((float(z1), float(z2), float(grid.lambda_llr[i, j]),
                         bool(grid.pd_accept[i, j]), bool(grid.lrt_accept[i, j])))
    return format_table(CONTOUR_COLUMNS, rows, {**meta, **contour_meta(grid)})


def write_contour_csv(path, grid: ContourGrid, meta: dict):
    _atomic_write(path, contour_csv(grid, meta))


def read_contour_csv(path) -> tuple[dict, list[tuple]]:
    meta, columns, raw = read_table(path)
    if tuple(columns) != CONTOUR_COLUMNS:
        raise ValueError(f"unexpected contour columns {columns}")
    rows = [(float(a), float(b), float(c), d == "1", e == "1") for a, b, c, d, e in raw]
    return meta, rows
