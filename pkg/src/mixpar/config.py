"""Experiment configuration: flat key=value files or JSON documents."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ExperimentConfig", "parse_config", "load_config",
           "ConfigParseError", "DEFAULT_THRESHOLDS"]

# fitted-rate floors per case; overridable from the config file
DEFAULT_THRESHOLDS = {
    "stokes": {"err_u_maxR": 0.9, "err_u_l2X": 0.9, "err_lambda_l2M": 0.9},
    "eddy2d": {"err_u_l2X": 0.9, "err_dtu": 0.9,
               "rel_E_pct": 0.8, "rel_H_pct": 0.8},
}

_CASES = ("stokes", "eddy2d")


class ConfigParseError(ValueError):
    """Config file is malformed or fails validation."""


@dataclass
class ExperimentConfig:
    case: str = "stokes"
    n: int = 4                 # base mesh subdivisions, doubled per level
    levels: int = 3
    T: float = 0.5
    steps: int = 4             # base time steps, doubled per level
    nu: float = 1.0
    sigma: float = 1.0
    eps: float = 1.0
    mu_mag: float = 1.0
    probes: bool = True
    xi: float = 1.0
    quad_degree: int = 4
    pattern: str = "right"
    out: str = "out"
    jobs: int = 1
    vtk_every: int = 0
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in _CASES:
            raise ConfigParseError(f"case must be one of {_CASES}")
        if self.levels < 1:
            raise ConfigParseError("levels must be >= 1")
        if self.n < 1:
            raise ConfigParseError("n must be >= 1")
        if self.steps < 1:
            raise ConfigParseError("steps must be >= 1")
        if self.T <= 0:
            raise ConfigParseError("T must be positive")
        if self.jobs < 1:
            raise ConfigParseError("jobs must be >= 1")
        if self.case == "eddy2d" and self.n % 3 != 0:
            raise ConfigParseError(
                "eddy2d needs n divisible by 3 so the conductor "
                "corners land on the grid lattice"
            )
        merged = dict(DEFAULT_THRESHOLDS[self.case])
        merged.update(self.thresholds)
        self.thresholds = merged
        for key, val in self.thresholds.items():
            if not (0.0 < val <= 2.0):
                raise ConfigParseError(
                    f"threshold {key}={val} outside (0, 2]"
                )


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}

_FIELD_TYPES = {
    "case": str, "n": int, "levels": int, "T": float, "steps": int,
    "nu": float, "sigma": float, "eps": float, "mu_mag": float,
    "probes": bool, "xi": float, "quad_degree": int, "pattern": str,
    "out": str, "jobs": int, "vtk_every": int,
}


def _coerce(key, raw):
    typ = _FIELD_TYPES[key]
    if typ is bool:
        if isinstance(raw, bool):
            return raw
        try:
            return _BOOL[str(raw).strip().lower()]
        except KeyError:
            raise ConfigParseError(f"bad boolean for {key}: {raw!r}") from None
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigParseError(f"bad value for {key}: {raw!r}") from None


def parse_config(text):
    """Parse a JSON document or flat key=value text into a config."""
    text = text.strip()
    fields: dict = {}
    thresholds: dict = {}
    if text.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigParseError(f"invalid JSON: {err}") from err
        if not isinstance(doc, dict):
            raise ConfigParseError("JSON config must be an object")
        for key, val in doc.items():
            if key == "thresholds":
                if not isinstance(val, dict):
                    raise ConfigParseError("thresholds must be an object")
                thresholds = {k: float(v) for k, v in val.items()}
            elif key in _FIELD_TYPES:
                fields[key] = _coerce(key, val)
            else:
                raise ConfigParseError(f"unknown config key {key!r}")
    else:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigParseError(f"line {lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key.startswith("threshold."):
                try:
                    thresholds[key.split(".", 1)[1]] = float(raw)
                except ValueError:
                    raise ConfigParseError(
                        f"line {lineno}: bad threshold {raw!r}"
                    ) from None
            elif key in _FIELD_TYPES:
                fields[key] = _coerce(key, raw)
            else:
                raise ConfigParseError(f"line {lineno}: unknown key {key!r}")
    return ExperimentConfig(thresholds=thresholds, **fields)


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigParseError(f"config file not found: {path}")
    return parse_config(path.read_text())
