"""Configuration ingestion, trajectory emission, and run manifests.

Configs are strict JSON: unknown keys are rejected with their path so typos
surface instead of silently falling back to defaults. Simulation output is
dimensionless; every emitted file gets a sibling manifest recording the fully
resolved config, the unit scales for SI reconstruction, the command line, the
seed, and a digest of each output file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .grid import GridSpec, GridTrajectory
from .units import (ApparatusParams, FdivSpec, G_NEWTON, MeasurementConfig,
                    Scales)

TRAJECTORY_HEADER = "t,xbar,x2bar,x_plus,x_minus,d,norm_plus,norm_minus,energy"

_TOP_KEYS = {"mass_kg", "radius_m", "density_kgm3", "G", "p", "F_meas_N",
             "tau_meas_s", "l0_m", "F_div", "grid", "gamma", "engine"}
_REQUIRED_KEYS = {"p", "F_meas_N", "tau_meas_s", "l0_m", "F_div"}
_GRID_KEYS = {"n", "l", "dt", "sample_every"}

GRID_DEFAULTS = {"n": 1024, "l": 32.0, "dt": 1e-3, "sample_every": 10}


class ConfigError(ValueError):
    """Configuration rejected; the message carries the offending key path."""


@dataclass(frozen=True)
class LoadedConfig:
    apparatus: ApparatusParams
    measurement: MeasurementConfig
    scales: Scales
    grid: GridSpec
    sample_every: int
    grid_explicit: bool
    gamma: float
    engine: str | None
    resolved: dict

    @property
    def f_meas_dimensionless(self) -> float:
        return self.measurement.f_meas / self.scales.force

    @property
    def tau_dimensionless(self) -> float:
        return self.measurement.tau_meas / self.scales.time

    def f_div_dimensionless(self) -> float:
        """Fixed diverting force in packet units; rejects the uniform kind."""
        if self.measurement.f_div.kind != "fixed":
            raise ConfigError(
                'F_div.kind: deterministic evolution needs {"kind": "fixed", '
                '"value_N": ...}; the uniform kind is for ensembles')
        return self.measurement.f_div.value / self.scales.force


def _require_number(obj: dict, key: str, path: str = "") -> float:
    where = f"{path}{key}"
    if key not in obj:
        raise ConfigError(f"missing required key: {where}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def load_config(path) -> LoadedConfig:
    """Read and fully validate a JSON config file.

    Returns the apparatus, measurement settings, unit scales, numerical
    options, and a resolved-config dict (all defaults applied) for the
    manifest.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown key: {unknown[0]}")
    missing = sorted(_REQUIRED_KEYS - set(raw))
    if missing:
        raise ConfigError(f"missing required key: {missing[0]}")

    body = {}
    for key in ("mass_kg", "radius_m", "density_kgm3"):
        if key in raw:
            body[key] = _require_number(raw, key)
    if len(body) < 2:
        raise ConfigError(
            "need at least two of mass_kg, radius_m, density_kgm3")
    big_g = _require_number(raw, "G") if "G" in raw else G_NEWTON
    try:
        apparatus = ApparatusParams.derive(mass=body.get("mass_kg"),
                                           radius=body.get("radius_m"),
                                           density=body.get("density_kgm3"),
                                           big_g=big_g)
    except ValueError as exc:
        raise ConfigError(f"mass_kg/radius_m/density_kgm3: {exc}")

    fdiv_raw = raw["F_div"]
    if not isinstance(fdiv_raw, dict) or "kind" not in fdiv_raw:
        raise ConfigError('F_div: expected an object with a "kind" key')
    kind = fdiv_raw["kind"]
    if kind == "uniform":
        if set(fdiv_raw) != {"kind"}:
            extra = sorted(set(fdiv_raw) - {"kind"})
            raise ConfigError(f"F_div.{extra[0]}: not allowed for the uniform kind")
        fdiv = FdivSpec("uniform")
    elif kind == "fixed":
        if set(fdiv_raw) != {"kind", "value_N"}:
            raise ConfigError('F_div: the fixed kind takes exactly "kind" and "value_N"')
        fdiv = FdivSpec("fixed", _require_number(fdiv_raw, "value_N", "F_div."))
    else:
        raise ConfigError(f"F_div.kind: expected 'uniform' or 'fixed', got {kind!r}")

    try:
        measurement = MeasurementConfig(p=_require_number(raw, "p"),
                                        f_meas=_require_number(raw, "F_meas_N"),
                                        tau_meas=_require_number(raw, "tau_meas_s"),
                                        l0=_require_number(raw, "l0_m"),
                                        f_div=fdiv)
    except ValueError as exc:
        msg = str(exc)
        key = msg.split(" ", 1)[0]
        rename = {"f_meas": "F_meas_N", "tau_meas": "tau_meas_s", "l0": "l0_m"}
        raise ConfigError(f"{rename.get(key, key)}: {msg}")

    grid_raw = raw.get("grid", {})
    if not isinstance(grid_raw, dict):
        raise ConfigError("grid: expected an object")
    unknown = sorted(set(grid_raw) - _GRID_KEYS)
    if unknown:
        raise ConfigError(f"grid.{unknown[0]}: unknown key")
    grid_opts = dict(GRID_DEFAULTS)
    for key in grid_raw:
        grid_opts[key] = _require_number(grid_raw, key, "grid.")
    if grid_opts["n"] != int(grid_opts["n"]):
        raise ConfigError(f"grid.n: expected an integer, got {grid_opts['n']!r}")
    if grid_opts["sample_every"] != int(grid_opts["sample_every"]) or grid_opts["sample_every"] < 1:
        raise ConfigError(
            f"grid.sample_every: expected a positive integer, got {grid_opts['sample_every']!r}")
    try:
        grid = GridSpec(half_length=grid_opts["l"], n=int(grid_opts["n"]),
                        dt=grid_opts["dt"])
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}")

    gamma = _require_number(raw, "gamma") if "gamma" in raw else 0.0
    if gamma < 0.0:
        raise ConfigError(f"gamma: must be >= 0, got {gamma!r}")
    engine = raw.get("engine")
    if engine is not None and engine not in ("analytic", "grid"):
        raise ConfigError(f"engine: expected 'analytic' or 'grid', got {engine!r}")

    scales = Scales.from_apparatus(apparatus)
    fdiv_resolved = ({"kind": "uniform"} if fdiv.kind == "uniform"
                     else {"kind": "fixed", "value_N": fdiv.value})
    resolved = {
        "si": {
            "mass_kg": apparatus.mass,
            "radius_m": apparatus.radius,
            "density_kgm3": apparatus.density,
            "G": apparatus.big_g,
            "p": measurement.p,
            "F_meas_N": measurement.f_meas,
            "tau_meas_s": measurement.tau_meas,
            "l0_m": measurement.l0,
            "F_div": fdiv_resolved,
            "gamma": gamma,
            "engine": engine,
            "grid": {"n": grid.n, "l": grid.half_length, "dt": grid.dt,
                     "sample_every": int(grid_opts["sample_every"])},
        },
        "dimensionless": {
            "p": measurement.p,
            "f_meas": measurement.f_meas / scales.force,
            "tau_meas": measurement.tau_meas / scales.time,
            "l0": measurement.l0 / scales.length,
            "f_div": (fdiv.value / scales.force if fdiv.kind == "fixed"
                      else "uniform"),
            "gamma": gamma,
        },
    }
    return LoadedConfig(apparatus=apparatus, measurement=measurement,
                        scales=scales, grid=grid,
                        sample_every=int(grid_opts["sample_every"]),
                        grid_explicit="grid" in raw, gamma=gamma,
                        engine=engine, resolved=resolved)


@dataclass
class TrajectoryTable:
    """Column set of the trajectory CSV; None columns emit empty cells."""

    t: np.ndarray
    xbar: np.ndarray
    x_plus: np.ndarray
    x_minus: np.ndarray
    d: np.ndarray
    x2bar: np.ndarray | None = None
    norm_plus: np.ndarray | None = None
    norm_minus: np.ndarray | None = None
    energy: np.ndarray | None = None

    @classmethod
    def from_grid(cls, traj: GridTrajectory) -> "TrajectoryTable":
        return cls(t=traj.t, xbar=traj.xbar, x_plus=traj.x_plus,
                   x_minus=traj.x_minus, d=traj.x_plus - traj.x_minus,
                   x2bar=traj.x2bar, norm_plus=traj.norm_plus,
                   norm_minus=traj.norm_minus, energy=traj.energy)

    @classmethod
    def from_analytic(cls, traj: dict) -> "TrajectoryTable":
        return cls(t=traj["t"], xbar=traj["xbar"], x_plus=traj["x_plus"],
                   x_minus=traj["x_minus"],
                   d=traj["x_plus"] - traj["x_minus"])


def _fmt(value) -> str:
    return format(float(value), ".17g")


def emit_trajectory(table: TrajectoryTable, path) -> None:
    """Write the trajectory CSV: fixed header and column order, 17 significant
    digits, '\\n' line endings, one trailing newline."""
    n = len(table.t)
    if n == 0:
        raise ValueError("trajectory is empty")
    columns = (table.t, table.xbar, table.x2bar, table.x_plus, table.x_minus,
               table.d, table.norm_plus, table.norm_minus, table.energy)
    lines = [TRAJECTORY_HEADER]
    for i in range(n):
        lines.append(",".join("" if col is None else _fmt(col[i])
                              for col in columns))
    Path(path).write_text("\n".join(lines) + "\n")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path_for(output_path) -> Path:
    return Path(str(output_path) + ".manifest.json")


def write_manifest(output_paths, command, resolved_config: dict,
                   scales: Scales, master_seed: int | None = None) -> Path:
    """Write a manifest next to the first output, covering all of them."""
    outputs = [{"path": Path(p).name, "sha256": file_digest(p)}
               for p in output_paths]
    manifest = {
        "tool": "gravimean",
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "command": list(command),
        "master_seed": master_seed,
        "config": resolved_config,
        "scales": {"length_m": scales.length, "time_s": scales.time,
                   "force_N": scales.force, "energy_J": scales.energy},
        "outputs": outputs,
    }
    path = manifest_path_for(output_paths[0])
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def verify_manifest(manifest_path) -> list[str]:
    """Recompute output digests; returns a list of mismatch descriptions."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    problems = []
    for entry in manifest.get("outputs", []):
        target = manifest_path.parent / entry["path"]
        if not target.exists():
            problems.append(f"missing output file: {entry['path']}")
            continue
        actual = file_digest(target)
        if actual != entry["sha256"]:
            problems.append(
                f"digest mismatch for {entry['path']}: manifest {entry['sha256']}, "
                f"file {actual}")
    return problems
