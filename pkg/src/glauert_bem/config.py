"""Run configuration: flat key=value files with dotted section prefixes.

Example::

    # three-bladed rotor, corrected model
    turbine.radius=1.1
    turbine.upstream_speed=1.0
    turbine.rotation_speed=2.7273
    correction.variant=wilson_spera
    correction.tip_loss=true
    polar.path=sample_polar.csv
    run.lambda_count=30
    design.mode=simplified
    output.path=out.csv

Unknown keys are rejected.  Defaults mirror the reference experimental
protocol: tol=1e-10, epsilon=1, bracket left end 1e-4, per-variant a_c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import BemError, ConfigError
from .model import CorrectionSpec, TurbineConfig
from .polar import PolarTable, load_polar
from .solvers import SolveOptions

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _as_bool(raw, key):
    low = raw.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _as_float(raw, key):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}")


def _as_int(raw, key):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")


# key -> (converter tag, default); REQUIRED means no default
_REQUIRED = object()
_SCHEMA = {
    "turbine.blade_count": ("int", 3),
    "turbine.radius": ("float", _REQUIRED),
    "turbine.fluid_density": ("float", 1.225),
    "turbine.upstream_speed": ("float", _REQUIRED),
    "turbine.rotation_speed": ("float", _REQUIRED),
    "turbine.lambda_min": ("float", 0.5),
    "turbine.lambda_max": ("float", 3.0),
    "polar.path": ("str", _REQUIRED),
    "polar.beta": ("float", None),
    "polar.alpha_s": ("float", None),
    "polar.clamp_cl": ("bool", False),
    "correction.variant": ("str", "none"),
    "correction.a_c": ("float", None),
    "correction.tip_loss": ("bool", False),
    "correction.strict_lemma_mode": ("bool", True),
    "solver.tol": ("float", 1e-10),
    "solver.max_iter": ("int", 10_000),
    "solver.epsilon": ("float", 1.0),
    "solver.phi0": ("float", None),
    "solver.bracket_lo": ("float", 1e-4),
    "solver.bracket_hi": ("float", None),
    "solver.phi_tol": ("float", 1e-12),
    "run.lambda": ("float", None),
    "run.lambda_count": ("int", None),
    "design.mode": ("str", "simplified"),
    "design.gamma": ("float", None),
    "design.chord": ("float", None),
    "design.step": ("float", 1e-2),
    "design.tol": ("float", 1e-6),
    "design.max_steps": ("int", 10_000),
    "sweep.grid_n": ("int", 50),
    "sweep.refine": ("bool", False),
    "output.path": ("str", None),
}

_CONVERT = {"int": _as_int, "float": _as_float, "bool": _as_bool,
            "str": lambda raw, key: raw}


@dataclass
class RunConfig:
    turbine: TurbineConfig
    polar: PolarTable
    correction: CorrectionSpec
    solver: SolveOptions
    bracket_lo: float
    bracket_hi: Optional[float]
    lambdas: np.ndarray
    design_mode: str
    design_gamma: Optional[float]
    design_chord: Optional[float]
    design_step: float
    design_tol: float
    design_max_steps: int
    sweep_grid_n: int
    sweep_refine: bool
    output_path: Optional[str]


def _read_pairs(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val
    return values


def parse_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    raw = _read_pairs(path)
    cfg = {}
    for key, (kind, default) in _SCHEMA.items():
        if key in raw:
            cfg[key] = _CONVERT[kind](raw[key], key)
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        else:
            cfg[key] = default

    base = Path(path).parent
    polar_path = Path(cfg["polar.path"])
    if not polar_path.is_absolute():
        polar_path = base / polar_path
    if not polar_path.exists():
        raise ConfigError(f"polar file not found: {polar_path}")

    try:
        turbine = TurbineConfig(
            blade_count=cfg["turbine.blade_count"],
            radius=cfg["turbine.radius"],
            fluid_density=cfg["turbine.fluid_density"],
            upstream_speed=cfg["turbine.upstream_speed"],
            rotation_speed=cfg["turbine.rotation_speed"],
            lambda_min=cfg["turbine.lambda_min"],
            lambda_max=cfg["turbine.lambda_max"],
        )
        polar = load_polar(polar_path, beta=cfg["polar.beta"],
                           alpha_s=cfg["polar.alpha_s"],
                           clamp_cl=cfg["polar.clamp_cl"])
        correction = CorrectionSpec(
            variant=cfg["correction.variant"],
            a_c=cfg["correction.a_c"],
            tip_loss=cfg["correction.tip_loss"],
            strict_lemma_mode=cfg["correction.strict_lemma_mode"],
        )
        solver = SolveOptions(
            tol=cfg["solver.tol"],
            max_iter=cfg["solver.max_iter"],
            epsilon=cfg["solver.epsilon"],
            phi0=cfg["solver.phi0"],
            phi_tol=cfg["solver.phi_tol"],
        )
    except BemError as exc:
        raise ConfigError(str(exc))

    lam_single, lam_count = cfg["run.lambda"], cfg["run.lambda_count"]
    if lam_single is not None and lam_count is not None:
        raise ConfigError("give either run.lambda or run.lambda_count, not both")
    if lam_single is not None:
        if not turbine.lambda_min <= lam_single <= turbine.lambda_max:
            raise ConfigError("run.lambda outside [lambda_min, lambda_max]")
        lambdas = np.array([lam_single])
    elif lam_count is not None:
        if lam_count < 1:
            raise ConfigError("run.lambda_count must be >= 1")
        lambdas = np.linspace(turbine.lambda_min, turbine.lambda_max, lam_count)
    else:
        raise ConfigError("missing run.lambda or run.lambda_count")

    mode = cfg["design.mode"]
    if mode not in ("fixed", "simplified", "corrected"):
        raise ConfigError(f"design.mode must be fixed|simplified|corrected, got {mode!r}")
    if mode == "fixed" and (cfg["design.gamma"] is None or cfg["design.chord"] is None):
        raise ConfigError("design.mode=fixed requires design.gamma and design.chord")
    if cfg["design.chord"] is not None and cfg["design.chord"] <= 0.0:
        raise ConfigError("design.chord must be positive")
    if cfg["design.gamma"] is not None and abs(cfg["design.gamma"]) >= math.pi / 2.0:
        raise ConfigError("design.gamma must satisfy |gamma| < pi/2")

    return RunConfig(
        turbine=turbine, polar=polar, correction=correction, solver=solver,
        bracket_lo=cfg["solver.bracket_lo"], bracket_hi=cfg["solver.bracket_hi"],
        lambdas=lambdas, design_mode=mode,
        design_gamma=cfg["design.gamma"], design_chord=cfg["design.chord"],
        design_step=cfg["design.step"], design_tol=cfg["design.tol"],
        design_max_steps=cfg["design.max_steps"],
        sweep_grid_n=cfg["sweep.grid_n"], sweep_refine=cfg["sweep.refine"],
        output_path=cfg["output.path"],
    )
