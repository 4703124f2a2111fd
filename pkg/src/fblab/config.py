"""Scenario run configuration: INI-style sections, fail-closed schema.

Unknown sections or keys are errors (a typo in a tolerance name must not
silently revert to a default). The schema is versioned; manifests are
plain JSON with sorted keys so reruns with identical configs are
byte-stable apart from the recorded timings.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1

_SCHEMA = {
    "run": {"version": int, "scenario": str, "stages": str},
    "grid": {"nx": int, "nt": int, "t1": float},
    "schedule": {"eps_start": float, "eps_min": float, "stop_tol": float,
                 "max_picard": int, "picard_tol": float},
    "params": {"c": float, "alpha": float, "gamma": float, "m_big": float,
               "weiss_variant": str, "slope_convention": str},
    "output": {"out_dir": str},
}

_REQUIRED = {("run", "version"), ("run", "scenario")}

STAGES = ("solve", "boundary", "hodograph", "weiss", "blowup", "series")

DEFAULT_STAGES = {
    "time_only": ("solve", "boundary"),
    "local_cap": ("solve",),
    "collapsing_interval": ("solve", "boundary", "hodograph", "weiss", "blowup"),
    "self_similar_1d": ("series",),
    "elliptic_cross": ("solve",),
    "custom": ("solve", "boundary"),
}


class ConfigError(ValueError):
    """Schema violation; carries the offending field and line if known."""

    def __init__(self, msg, field_name=None, line=None):
        super().__init__(msg)
        self.field_name = field_name
        self.line = line


@dataclass
class RunConfig:
    scenario: str
    stages: tuple
    nx: int = 401
    nt: int | None = None
    t1: float | None = None
    eps_start: float = 0.1
    eps_min: float | None = None
    stop_tol: float = 1e-6
    max_picard: int = 200
    picard_tol: float = 1e-12
    c: float | None = None
    alpha: float = 0.5
    gamma: float = 0.25
    m_big: float = 20.0
    weiss_variant: str = "proof-2x"
    slope_convention: str = "series"
    out_dir: str = "runs"
    solution_path: str | None = None   # rerun stages from a stored field
    raw: dict = field(default_factory=dict)


def _find_line(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        if line.strip().lower().startswith(key.lower()):
            return i
    return None


def parse_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        line = getattr(e, "lineno", None)
        raise ConfigError(f"{path}: {e}", line=line) from e

    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]",
                              field_name=section,
                              line=_find_line(text, f"[{section}]"))
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"{path}: unknown key {key!r} in [{section}]",
                    field_name=f"{section}.{key}", line=_find_line(text, key))
            caster = _SCHEMA[section][key]
            try:
                values[(section, key)] = caster(raw)
            except ValueError as e:
                raise ConfigError(
                    f"{path}: bad value for {section}.{key}: {raw!r}",
                    field_name=f"{section}.{key}",
                    line=_find_line(text, key)) from e
    for sec, key in _REQUIRED:
        if (sec, key) not in values:
            raise ConfigError(f"{path}: missing required {sec}.{key}",
                              field_name=f"{sec}.{key}")
    if values[("run", "version")] != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema version {values[('run', 'version')]} "
            f"unsupported (expected {SCHEMA_VERSION})", field_name="run.version")

    scenario = values[("run", "scenario")]
    from .scenarios import LABELS

    if scenario not in LABELS:
        raise ConfigError(f"{path}: unknown scenario {scenario!r}",
                          field_name="run.scenario")
    stages_raw = values.get(("run", "stages"))
    if stages_raw is None:
        stages = DEFAULT_STAGES[scenario]
    else:
        stages = tuple(s.strip() for s in stages_raw.split(",") if s.strip())
        bad = [s for s in stages if s not in STAGES]
        if bad:
            raise ConfigError(f"{path}: unknown stages {bad}",
                              field_name="run.stages")

    cfg = RunConfig(scenario=scenario, stages=stages,
                    raw={f"{s}.{k}": v for (s, k), v in values.items()})
    for (sec, key), v in values.items():
        if sec == "run":
            continue
        setattr(cfg, key, v)
    return cfg


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    if isinstance(obj, float) or obj != obj:  # NaN guard for odd numerics
        return float(obj)
    return str(obj)


def write_manifest(manifest: dict, path) -> Path:
    """Deterministic JSON: sorted keys, repr floats; timings live under
    their own key so byte-stability checks can drop them."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True,
                  allow_nan=True)
        fh.write("\n")
    return path


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
