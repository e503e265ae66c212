"""JSON run configuration and the built-in presets.

A configuration is one JSON object. Every section is optional; a command
only reads the sections it needs::

    {
      "master_seed": 7,
      "quadrature": {"method": "window", "node_count": 64},
      "scenario":   {"n": 2, "num_blocks": 2, "fading_rate": 1.0, "noise_var": 1.0,
                     "alice_power": 1.0, "field": "real"},
      "sweep":      {"mode": "phase", "n_values": [100, 1000], "block_len": 1,
                     "rho_grid": {"start": 0.05, "stop": 0.95, "step": 0.05},
                     "c": 0.03, "fading_mean": 100.0, "target_pfa": 0.01,
                     "trials": 10000, "calibration_trials": 10000, "detectors": ["lrt"]},
      "contour":    {"axis_max": 12.0, "step": 0.2, "target_pfa": 0.01,
                     "calibration_trials": 1000000},
      "bounds":     {"samples": 100000, "direction": "f0_f1"},
      "simulate":   {"trials": 1000},
      "calibrate":  {"target_pfa": 0.01, "trials": 10000,
                     "detectors": ["lrt", "power", "mean_threshold"]}
    }

Fading may be given as ``fading_rate`` (lambda) or ``fading_mean`` (1/lambda),
never both.
"""
from __future__ import annotations

import copy
import json

import numpy as np

from .detectors import DetectorKind
from .experiments import SweepConfig
from .model import Field, SystemParams
from .numerics import METHODS, QuadratureSpec


class ConfigError(ValueError):
    pass


_RHO_GRID = {"start": 0.05, "stop": 0.95, "step": 0.05}

PRESETS = {
    "unit": {
        "master_seed": 1,
        "scenario": {"n": 1, "num_blocks": 1, "fading_rate": 1.0, "noise_var": 1.0,
                     "alice_power": 1.0, "field": "complex"},
        "bounds": {"samples": 100_000, "direction": "f0_f1"},
        "simulate": {"trials": 1000},
        "calibrate": {"target_pfa": 0.01, "trials": 10_000,
                      "detectors": ["lrt", "power", "mean_threshold"]},
    },
    # "lambda=100" read as a fading mean of 100, i.e. rate 0.01
    "fig3": {
        "master_seed": 3,
        "sweep": {"mode": "phase", "n_values": [100, 1000, 10_000, 100_000], "block_len": 1,
                  "rho_grid": dict(_RHO_GRID), "c": 0.03, "fading_mean": 100.0,
                  "noise_var": 1.0, "field": "complex", "target_pfa": 0.01, "trials": 10_000,
                  "calibration_trials": 10_000, "detectors": ["lrt"]},
    },
    "fig4": {
        "master_seed": 4,
        "sweep": {"mode": "block", "n": 1000, "block_counts": [10, 100, 1000],
                  "rho_grid": dict(_RHO_GRID), "c": 0.03, "fading_mean": 100.0,
                  "noise_var": 1.0, "field": "complex", "target_pfa": 0.01, "trials": 10_000,
                  "calibration_trials": 10_000, "detectors": ["lrt"]},
    },
    "fig5": {
        "master_seed": 5,
        "scenario": {"n": 2, "num_blocks": 2, "fading_rate": 1.0, "noise_var": 1.0,
                     "alice_power": 1.0, "field": "real"},
        "contour": {"axis_max": 12.0, "step": 0.2, "target_pfa": 0.01,
                    "calibration_trials": 1_000_000},
        "calibrate": {"target_pfa": 0.01, "trials": 100_000, "detectors": ["lrt", "power"]},
    },
}

_SECTIONS = {
    "master_seed": None,
    "quadrature": {"method", "node_count", "rel_tol", "abs_tol", "max_subdivisions",
                   "window_depth"},
    "scenario": {"n", "num_blocks", "block_len", "fading_rate", "fading_mean", "noise_var",
                 "alice_power", "field"},
    "sweep": {"mode", "n_values", "block_len", "n", "block_counts", "rho_grid", "c",
              "fading_rate", "fading_mean", "noise_var", "field", "target_pfa", "trials",
              "calibration_trials", "detectors"},
    "contour": {"axis_max", "step", "target_pfa", "calibration_trials"},
    "bounds": {"samples", "direction"},
    "simulate": {"trials"},
    "calibrate": {"target_pfa", "trials", "detectors"},
}


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")


def load_config(path) -> dict:
    """Parse a JSON config file, reporting syntax errors with line and column."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    validate_keys(data, str(path))
    return data


def validate_keys(data: dict, where: str = "config"):
    for key, value in data.items():
        if key not in _SECTIONS:
            raise ConfigError(f"{where}: unknown key {key!r}")
        allowed = _SECTIONS[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: section {key!r} must be an object")
        extra = set(value) - allowed
        if extra:
            raise ConfigError(f"{where}: unknown field(s) {key}.{', '.join(sorted(extra))}")


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _require(section: dict, name: str, key: str):
    if key not in section:
        raise ConfigError(f"{name}.{key}: required field missing")
    return section[key]


def _number(section, name, key, kind=float, default=None, positive=False):
    if key not in section:
        if default is None:
            raise ConfigError(f"{name}.{key}: required field missing")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}.{key}: expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(f"{name}.{key}: expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{name}.{key}: must be positive, got {value!r}")
    return kind(value)


def _fading_rate(section, name):
    if "fading_rate" in section and "fading_mean" in section:
        raise ConfigError(f"{name}: give fading_rate or fading_mean, not both")
    if "fading_mean" in section:
        return 1.0 / _number(section, name, "fading_mean", positive=True)
    return _number(section, name, "fading_rate", positive=True)


def _field(section, name):
    value = section.get("field", "complex")
    try:
        return Field(value)
    except ValueError:
        raise ConfigError(f"{name}.field: expected 'real' or 'complex', got {value!r}")


def _detectors(section, name, default):
    values = section.get("detectors", default)
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name}.detectors: expected a nonempty list")
    try:
        return tuple(DetectorKind(v) for v in values)
    except ValueError as exc:
        raise ConfigError(f"{name}.detectors: {exc}")


def master_seed(config: dict) -> int:
    seed = config.get("master_seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"master_seed: expected an unsigned 64-bit integer, got {seed!r}")
    return seed


def quadrature(config: dict) -> QuadratureSpec:
    q = config.get("quadrature", {})
    method = q.get("method", "window")
    if method not in METHODS:
        raise ConfigError(f"quadrature.method: expected one of {METHODS}, got {method!r}")
    try:
        return QuadratureSpec(method=method,
                              node_count=_number(q, "quadrature", "node_count", int, 64),
                              rel_tol=_number(q, "quadrature", "rel_tol", float, 1e-12),
                              abs_tol=_number(q, "quadrature", "abs_tol", float, 1e-300),
                              max_subdivisions=_number(q, "quadrature", "max_subdivisions", int,
                                                       200),
                              window_depth=_number(q, "quadrature", "window_depth", float, 60.0))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"quadrature: {exc}") from exc


def scenario(config: dict) -> SystemParams:
    s = config.get("scenario")
    if s is None:
        raise ConfigError("scenario: section required for this command")
    name = "scenario"
    n = _number(s, name, "n", int)
    m = _number(s, name, "num_blocks", int)
    block_len = _number(s, name, "block_len", int, default=0) or None
    try:
        return SystemParams(n=n, num_blocks=m, block_len=block_len,
                            fading_rate=_fading_rate(s, name),
                            noise_var=_number(s, name, "noise_var", float, 1.0),
                            alice_power=_number(s, name, "alice_power", float, 0.0),
                            field=_field(s, name))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def rho_grid(value, name="sweep.rho_grid"):
    if isinstance(value, dict):
        start = _number(value, name, "start")
        stop = _number(value, name, "stop")
        step = _number(value, name, "step", positive=True)
        count = int(round((stop - start) / step))
        return tuple(np.round(start + step * np.arange(count + 1), 10).tolist())
    if isinstance(value, list) and value:
        return tuple(float(v) for v in value)
    raise ConfigError(f"{name}: expected a list or a {{start, stop, step}} object")


def sweep(config: dict) -> SweepConfig:
    s = config.get("sweep")
    if s is None:
        raise ConfigError("sweep: section required for this command")
    name = "sweep"
    mode = s.get("mode", "phase")
    kwargs = dict(
        mode=mode,
        rho_grid=rho_grid(_require(s, name, "rho_grid")),
        c=_number(s, name, "c", positive=True),
        fading_rate=_fading_rate(s, name),
        noise_var=_number(s, name, "noise_var", float, 1.0),
        field=_field(s, name),
        target_pfa=_number(s, name, "target_pfa", float, 0.01),
        trials=_number(s, name, "trials", int, 10_000),
        calibration_trials=_number(s, name, "calibration_trials", int, 10_000),
        detectors=_detectors(s, name, ["lrt"]),
        master_seed=master_seed(config),
        quadrature=quadrature(config),
    )
    if mode == "phase":
        kwargs["n_values"] = tuple(int(v) for v in _require(s, name, "n_values"))
        kwargs["block_len"] = _number(s, name, "block_len", int, 1)
    elif mode == "block":
        kwargs["n"] = _number(s, name, "n", int)
        kwargs["block_counts"] = tuple(int(v) for v in _require(s, name, "block_counts"))
    else:
        raise ConfigError(f"sweep.mode: expected 'phase' or 'block', got {mode!r}")
    try:
        cfg = SweepConfig(**kwargs)
        for n, m, rho in cfg.cells():
            cfg.params_for(n, m, rho)
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from exc
    return cfg


def section(config: dict, name: str) -> dict:
    s = config.get(name)
    if s is None:
        raise ConfigError(f"{name}: section required for this command")
    return s


def number(config_section: dict, name: str, key: str, kind=float, default=None, positive=False):
    return _number(config_section, name, key, kind, default, positive)


def detectors(config_section: dict, name: str, default) -> tuple:
    return _detectors(config_section, name, default)
