"""Experiment configuration: JSON files, schema-checked, fully resolved.

Unknown keys are rejected at every level; every run echoes the resolved
config (defaults filled in) into its output files, so a result can be
reproduced from the artifact alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConfigError

GOLDEN_MEAN = 0.6180339887498949

_POTENTIAL_SCHEMA = {"preset": str, "coeffs": list}
_SCALE_SCHEMA = {"N1": int, "tau": float, "vartheta": float, "beta": float,
                 "gamma": float, "nu": float, "A_exp": float, "cap": int,
                 "n_scales": int}

_SCHEMAS = {
    "lyapunov": {
        "command": str,
        "potential": dict,
        "lambda": float,
        "omega": (float, str),
        "E_min": float,
        "E_max": float,
        "E_count": int,
        "E_values": list,
        "n": int,
        "x_samples": int,
        "seed": int,
    },
    "verify": {"command": str, "suite": str, "seed": int, "trials": int},
    "multiscale": {
        "command": str,
        "potential": dict,
        "lambda": float,
        "omega_grid": int,
        "x_grid": int,
        "scale": dict,
        "seed": int,
        "strict": bool,
        "h4_samples": int,
    },
    "variation": {
        "command": str,
        "T": int,
        "delta": float,
        "seed": int,
        "grid_n": int,
        "morse": dict,
    },
}

_MORSE_SCHEMA = {"lambda": float, "eps": float, "samples": int, "N1": int,
                 "omega": (float, str), "x": float}

_DEFAULTS = {
    "lyapunov": {"potential": {"preset": "cos"}, "lambda": 5.0,
                 "omega": "golden", "E_min": -12.0, "E_max": 12.0,
                 "E_count": 50, "n": 10000, "x_samples": 50, "seed": 0},
    "verify": {"suite": "appendixB", "seed": 0},
    "multiscale": {"potential": {"preset": "cos"}, "lambda": 1e4,
                   "omega_grid": 64, "x_grid": 64,
                   "scale": {"N1": 4, "tau": 0.3, "vartheta": 0.5,
                             "beta": 1.5, "gamma": 0.5, "nu": 0.5,
                             "A_exp": 0.5, "cap": 200, "n_scales": 2},
                   "seed": 0, "strict": False, "h4_samples": 800},
    "variation": {"T": 10, "delta": 1e-6, "seed": 0, "grid_n": 4096,
                  "morse": {"lambda": 1e4, "eps": 1e-8, "samples": 10000,
                            "N1": 4, "omega": "golden", "x": 0.13}},
}


def _check_keys(obj: dict, schema: dict, where: str):
    for key, val in obj.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in {where}")
        want = schema[key]
        if want is float:
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"{where}.{key} must be a number")
        elif want is int:
            if not isinstance(val, int) or isinstance(val, bool):
                raise ConfigError(f"{where}.{key} must be an integer")
        elif isinstance(want, tuple):
            if not isinstance(val, want) or isinstance(val, bool):
                raise ConfigError(f"{where}.{key} has wrong type")
        elif not isinstance(val, want):
            raise ConfigError(f"{where}.{key} must be {want.__name__}")


def resolve_omega(value):
    if value == "golden":
        return GOLDEN_MEAN
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"omega must be a number or 'golden', got {value!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    resolved: dict

    @staticmethod
    def load(path: str, command: str, seed: int | None = None,
             strict: bool | None = None) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return ExperimentConfig.from_dict(raw, command, seed=seed, strict=strict)

    @staticmethod
    def from_dict(raw: dict, command: str, seed: int | None = None,
                  strict: bool | None = None) -> "ExperimentConfig":
        if command not in _SCHEMAS:
            raise ConfigError(f"unknown command {command!r}")
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        declared = raw.get("command")
        if declared is not None and declared != command:
            raise ConfigError(
                f"config declares command {declared!r}, invoked as {command!r}")
        _check_keys(raw, _SCHEMAS[command], command)
        if "potential" in raw:
            _check_keys(raw["potential"], _POTENTIAL_SCHEMA, "potential")
            if raw["potential"].get("preset") not in ("cos", "two-wave",
                                                      "coscoeff"):
                raise ConfigError("potential.preset must be cos | two-wave"
                                  " | coscoeff")
        if "scale" in raw:
            _check_keys(raw["scale"], _SCALE_SCHEMA, "scale")
        if "morse" in raw:
            _check_keys(raw["morse"], _MORSE_SCHEMA, "morse")
        out = _deep_merge(_DEFAULTS[command], raw)
        out["command"] = command
        if seed is not None:
            out["seed"] = int(seed)
        if strict is not None:
            out["strict"] = bool(strict)
        if "omega" in out:
            resolve_omega(out["omega"])  # validate now, resolve at use
        if command == "verify":
            from .suites import SUITE_NAMES
            if out["suite"] not in SUITE_NAMES:
                raise ConfigError(f"unknown suite {out['suite']!r}")
        if command == "variation":
            if not (0 < out["delta"] <= out["T"] ** -5.0):
                raise ConfigError(
                    f"delta={out['delta']} violates delta <= T^-5")
        return ExperimentConfig(command, out)

    def json(self) -> str:
        return json.dumps(self.resolved, sort_keys=True)


def _deep_merge(defaults: dict, override: dict) -> dict:
    out = {}
    for k, v in defaults.items():
        if k in override and isinstance(v, dict) and isinstance(override[k], dict):
            out[k] = _deep_merge(v, override[k])
        elif k in override:
            out[k] = override[k]
        else:
            out[k] = v
    for k, v in override.items():
        if k not in out and k != "command":
            out[k] = v
    return out
