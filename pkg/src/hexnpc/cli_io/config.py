"""Experiment configuration: schema, profiles and validation."""

from __future__ import annotations

import hashlib
import json
import os
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError
from ..qpm_geometry import LatticeConfig

__all__ = [
    "Task",
    "CrystalSection",
    "PumpSection",
    "GridSection",
    "ExperimentConfig",
    "load_config",
    "config_hash",
    "PROFILES",
    "RESONANCE_TOL",
]

RESONANCE_TOL = 1e-6  # |q_p -+ G_x| / G_x accepted as superresonant


class Task(str, Enum):
    qpm_curves = "qpm_curves"
    three_mode = "three_mode"
    four_mode = "four_mode"
    fock_conditional = "fock_conditional"
    fibonacci = "fibonacci"
    wigner_run = "wigner_run"
    gain_exponent_sweep = "gain_exponent_sweep"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CrystalSection(_Section):
    lambda_p_nm: float = Field(527.5, gt=0)
    lambda_s_nm: Optional[float] = Field(None, gt=0)
    poling_period_um: float = Field(8.3, gt=0)
    length_mm: float = Field(10.0, gt=0)
    carrier: Literal["midpoint", "shared_signal", "shared_idler"] = "midpoint"
    sellmeier: Optional[str] = None


class PumpSection(_Section):
    q_p_units: float = 0.0  # transverse pump tilt in units of G_x
    q_py: float = 0.0
    g0l: float = Field(5.0, ge=0)
    duration_fwhm_ps: float = Field(10.0, gt=0)
    waist_x_um: float = Field(300.0, gt=0)
    waist_y_um: float = Field(200.0, gt=0)
    waist_convention: Literal["1/e2_intensity_radius"] = "1/e2_intensity_radius"
    profile: Literal["gaussian", "plane"] = "gaussian"
    depletion: bool = False


class GridSection(_Section):
    n_x: int = Field(gt=0)
    n_y: int = Field(gt=0)
    n_t: int = Field(gt=0)
    periods_x: int = Field(gt=0)
    L_y_um: float = Field(gt=0)
    T_ps: float = Field(gt=0)


PROFILES: dict[str, dict[str, Any]] = {
    "desk": {
        "grid": {"n_x": 256, "n_y": 64, "n_t": 256, "periods_x": 85, "L_y_um": 800.0, "T_ps": 40.0},
        "steps": 100,
        "ensemble_size": 50,
    },
    "paper": {
        "grid": {"n_x": 512, "n_y": 256, "n_t": 512, "periods_x": 170, "L_y_um": 1600.0, "T_ps": 80.0},
        "steps": 400,
        "ensemble_size": 200,
    },
}


class ExperimentConfig(_Section):
    task: Task
    seed: int = Field(0, ge=0)
    output_dir: str = "hexnpc-out"
    profile: Literal["desk", "paper"] = "desk"
    threads: int = Field(1, ge=1)
    crystal: CrystalSection = Field(default_factory=CrystalSection)
    pump: PumpSection = Field(default_factory=PumpSection)
    grid: Optional[GridSection] = None
    steps: Optional[int] = Field(None, gt=0)
    ensemble_size: Optional[int] = Field(None, gt=0)
    # task-specific knobs; see README for the keys each task reads
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _fill_profile(self):
        prof = PROFILES[self.profile]
        if self.grid is None:
            self.grid = GridSection(**prof["grid"])
        if self.steps is None:
            self.steps = prof["steps"]
        if self.ensemble_size is None:
            self.ensemble_size = prof["ensemble_size"]
        return self

    # ------------------------------------------------------------ helpers
    def lattice(self) -> LatticeConfig:
        return LatticeConfig.litao3(self.crystal.poling_period_um * 1e-6)

    @property
    def q_p(self) -> float:
        return self.pump.q_p_units * self.lattice().G_x

    def semantic_errors(self) -> list[str]:
        """Cross-field checks that the schema alone cannot express."""
        errs = []
        if self.pump.q_py != 0.0:
            errs.append("pump.q_py: a pump tilt along y is not supported (must be 0)")
        detuning = min(abs(self.pump.q_p_units - 1), abs(self.pump.q_p_units + 1))
        if self.task == Task.four_mode and detuning > RESONANCE_TOL:
            errs.append(
                f"task four_mode needs a superresonant pump (q_p_units = +-1); "
                f"detuning {detuning:.3g} exceeds {RESONANCE_TOL:g}"
            )
        if self.task in (Task.wigner_run, Task.gain_exponent_sweep):
            errs += self._grid_errors()
        if self.task == Task.gain_exponent_sweep:
            vals = self.params.get("g0l_values", [3.0, 4.0, 5.0])
            if len(vals) < 3:
                errs.append("params.g0l_values: at least three gain values are required")
        return errs

    def _grid_errors(self) -> list[str]:
        from ..wigner import PumpPulse

        errs = []
        try:
            grid = self.grid_spec()
        except ValueError as exc:
            return [f"grid: {exc}"]
        errs += [f"grid: {m}" for m in grid.check(self.lattice(), self.q_p)]
        pulse = PumpPulse(duration_fwhm=self.pump.duration_fwhm_ps * 1e-12,
                          waist_x=self.pump.waist_x_um * 1e-6, waist_y=self.pump.waist_y_um * 1e-6,
                          q_p=self.q_p, g0l=self.pump.g0l, profile=self.pump.profile)
        errs += [f"pump: {m}" for m in pulse.check(grid)]
        dz = self.crystal.length_mm * 1e-3 / self.steps
        if self.pump.g0l / (self.crystal.length_mm * 1e-3) * dz >= 0.1:
            errs.append(f"steps: g0*dz = {self.pump.g0l / self.steps:.3g} must stay below 0.1")
        return errs

    def grid_spec(self):
        from ..wigner import GridSpec

        g = self.grid
        return GridSpec.for_lattice(self.lattice(), g.n_x, g.n_y, g.n_t, g.periods_x,
                                    g.L_y_um * 1e-6, g.T_ps * 1e-12)


def _format_pydantic(exc: ValidationError) -> list[str]:
    out = []
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        out.append(f"{loc}: {e['msg']}")
    return out


def load_config(source, overrides: dict | None = None, environ=None) -> ExperimentConfig:
    """Parse, override and validate a config; every problem is reported at once.

    ``source`` is a path to a YAML/JSON file or an already-parsed mapping.
    Precedence: explicit ``overrides`` (command-line flags), then the
    ``HEXNPC_OUTPUT_DIR``/``HEXNPC_THREADS`` environment variables, then
    the file.
    """
    environ = os.environ if environ is None else environ
    if isinstance(source, (str, Path)):
        try:
            raw = yaml.safe_load(Path(source).read_text())
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"]) from exc
        except yaml.YAMLError as exc:
            raise ConfigError([f"config is not valid YAML: {exc}"]) from exc
    else:
        raw = source
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a mapping"])
    if raw.get("schema") == "manifest/1":  # rerun from a previous artifact directory
        raw = raw.get("config") or {}
    raw = dict(raw)
    if environ.get("HEXNPC_OUTPUT_DIR"):
        raw["output_dir"] = environ["HEXNPC_OUTPUT_DIR"]
    if environ.get("HEXNPC_THREADS"):
        raw["threads"] = environ["HEXNPC_THREADS"]
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_pydantic(exc)) from None
    errs = cfg.semantic_errors()
    if errs:
        raise ConfigError(errs)
    return cfg


def config_hash(cfg: ExperimentConfig) -> str:
    doc = cfg.model_dump(mode="json", exclude={"output_dir", "threads"})
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()

