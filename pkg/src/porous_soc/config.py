"""Run configuration: YAML file, JSON-schema validation, object builders."""
from __future__ import annotations

import copy
import math
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
import yaml

from .extinction import ExtinctionConfig, soc_shift
from .graphs import KIND_NAMES, GraphError, graph_from_dict
from .hspace import Field, Grid, continuum_mode
from .solver import SolverConfig

__all__ = [
    "ConfigError",
    "DEFAULTS",
    "CONFIG_SCHEMA",
    "ENSEMBLE_SCHEMA",
    "SIMULATE_SCHEMA",
    "load_config",
    "merge_defaults",
    "build_solver_config",
    "build_extinction_config",
    "build_initial",
    "defaults_yaml",
]


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "model": {"kind": "coercive_sign", "rho": 1.0, "delta": 0.1, "x_c": 0.0},
    "noise": {"N": 0, "mu": []},
    "discretization": {"n": 400, "dt": 1.0e-4, "lambda": 1.0e-3, "T": 0.5},
    "solver": {"newton_tol": 1.0e-11, "newton_max_iter": 50, "record_stride": 1},
    "initial": {"type": "mode", "k": 1, "amplitude": 0.1},
    "extinction": {
        "epsilon_ext": 1.0e-6,
        "persistence_steps": 100,
        "horizons": [0.05, 0.1, 0.2, 0.5],
        "trajectories": 400,
        "confidence": 0.99,
    },
    "seed": 0,
    "workers": 1,
    "output": {"dir": "out", "record": False},
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(KIND_NAMES)},
                "x_c": _num,
                "rho": {"type": "number", "minimum": 0},
                "delta": _pos,
                "knots": {"type": "array", "items": _num},
                "values": {"type": "array", "items": _num},
                "slope": {"type": "number", "minimum": 0},
                "a": _num,
                "alpha1": _pos,
                "alpha2": _pos,
                "alpha": _pos,
                "coefficient": _pos,
            },
            "additionalProperties": False,
        },
        "noise": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 0},
                "mu": {"type": "array", "items": {"type": "number", "minimum": 0}},
            },
            "additionalProperties": False,
        },
        "discretization": {
            "type": "object",
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "dt": _pos,
                "lambda": _pos,
                "T": _pos,
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {"newton_tol": _pos, "newton_max_iter": _posint,
                           "record_stride": _posint},
            "additionalProperties": False,
        },
        "initial": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["mode", "zero", "constant", "values"]},
                "k": _posint,
                "amplitude": _num,
                "value": _num,
                "values": {"type": "array", "items": _num},
            },
            "additionalProperties": False,
        },
        "extinction": {
            "type": "object",
            "properties": {
                "epsilon_ext": _pos,
                "persistence_steps": {"type": "integer", "minimum": 0},
                "horizons": {"type": "array", "items": _pos, "minItems": 1},
                "trajectories": _posint,
                "confidence": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "workers": _posint,
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}, "record": {"type": "boolean"}},
            "additionalProperties": False,
        },
    },
}

_nullable_num = {"type": ["number", "null"]}

ENSEMBLE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["params", "x_norm", "rho", "gamma_est", "c_n", "admissible", "horizons",
                 "extinction_times", "timestamp"],
    "properties": {
        "params": {"type": "object"},
        "x_norm": {"type": "number", "minimum": 0},
        "rho": _pos,
        "gamma_est": _pos,
        "c_n": {"type": "number", "minimum": 0},
        "admissible": {"type": "boolean"},
        "exploratory": {"type": "boolean"},
        "horizons": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["n", "p_hat", "ci_lo", "ci_hi", "bound"],
                "properties": {
                    "n": _pos,
                    "p_hat": {"type": "number", "minimum": 0, "maximum": 1},
                    "ci_lo": {"type": "number", "minimum": 0, "maximum": 1},
                    "ci_hi": {"type": "number", "minimum": 0, "maximum": 1},
                    "bound": {"type": "number", "minimum": 0, "maximum": 1},
                    "vacuous": {"type": "boolean"},
                },
            },
        },
        "extinction_times": {"type": "array", "items": _nullable_num},
        "violations": {"type": "object"},
        "timestamp": {"type": "string"},
    },
}

SIMULATE_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["extinction_time", "final", "max_energy_residual", "min_x", "steps",
                 "timestamp"],
    "properties": {
        "extinction_time": _nullable_num,
        "deterministic_bound": _nullable_num,
        "final": {
            "type": "object",
            "required": ["t", "h1norm", "l2norm", "l1norm"],
            "properties": {k: _num for k in ("t", "h1norm", "l2norm", "l1norm")},
        },
        "max_energy_residual": _num,
        "min_x": _num,
        "steps": {"type": "integer", "minimum": 0},
        "violations": {"type": "array", "items": _num},
        "params": {"type": "object"},
        "timestamp": {"type": "string"},
    },
}


# switching the family in these sections drops the default family's parameters
_FAMILY_KEY = {"model": "kind", "initial": "type"}


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            key = _FAMILY_KEY.get(k)
            if key in v and v[key] != out[k].get(key):
                out[k] = {"x_c": out[k]["x_c"]} if k == "model" else {}
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def merge_defaults(cfg: dict | None) -> dict:
    cfg = cfg or {}
    if not isinstance(cfg, dict):
        raise ConfigError("configuration must be a mapping")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {loc}: {exc.message}") from None
    merged = _deep_merge(DEFAULTS, cfg)
    noise = merged["noise"]
    if "N" in cfg.get("noise", {}) and "mu" in cfg.get("noise", {}):
        if noise["N"] != len(noise["mu"]):
            raise ConfigError(f"noise.N={noise['N']} but {len(noise['mu'])} amplitudes given")
    elif "mu" in cfg.get("noise", {}):
        noise["N"] = len(noise["mu"])
    elif noise["N"] != len(noise["mu"]):
        raise ConfigError(f"noise.N={noise['N']} needs that many amplitudes in noise.mu")
    ext = merged["extinction"]["horizons"]
    if any(b <= a for a, b in zip(ext, ext[1:])):
        raise ConfigError("extinction.horizons must be strictly increasing")
    return merged


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return merge_defaults({})
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from None
    return merge_defaults(raw)


def _graph(cfg: dict):
    model = {k: v for k, v in cfg["model"].items() if k != "x_c"}
    try:
        return graph_from_dict(model)
    except (GraphError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad model section: {exc}") from None


def build_solver_config(cfg: dict, **overrides) -> SolverConfig:
    d, s = cfg["discretization"], cfg["solver"]
    kw = dict(graph=_graph(cfg), n=d["n"], dt=d["dt"], T=d["T"], lam=d["lambda"],
              mu=tuple(cfg["noise"]["mu"]), record_stride=s["record_stride"],
              newton_tol=s["newton_tol"], newton_max_iter=s["newton_max_iter"],
              eps_ext=cfg["extinction"]["epsilon_ext"],
              persistence_steps=cfg["extinction"]["persistence_steps"])
    kw.update(overrides)
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_extinction_config(cfg: dict) -> ExtinctionConfig:
    e = cfg["extinction"]
    rho = cfg["model"].get("rho", 1.0)
    try:
        return ExtinctionConfig(rho=rho, eps_ext=e["epsilon_ext"], horizons=tuple(e["horizons"]),
                                M=e["trajectories"], x_c=cfg["model"].get("x_c", 0.0),
                                persistence_steps=e["persistence_steps"],
                                confidence=e["confidence"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_initial(cfg: dict, shifted: bool = False) -> Field:
    """Initial state in the original variable (or shifted by ``x_c``)."""
    grid = Grid(cfg["discretization"]["n"])
    ini = cfg["initial"]
    kind = ini["type"]
    if kind == "zero":
        x = grid.zeros()
    elif kind == "mode":
        x = continuum_mode(grid, ini.get("k", 1)) * ini.get("amplitude", 1.0)
    elif kind == "constant":
        x = grid.field(np.full(grid.n, float(ini.get("value", 0.0))))
    else:
        vals = ini.get("values", [])
        if len(vals) != grid.n:
            raise ConfigError(f"initial.values has {len(vals)} entries, grid has {grid.n} nodes")
        x = grid.field(vals)
    if not np.all(np.isfinite(x.values)) or not math.isfinite(float(np.abs(x.values).max())):
        raise ConfigError("initial state must be finite")
    return soc_shift(x, cfg["model"].get("x_c", 0.0)) if shifted else x


def defaults_yaml() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)
