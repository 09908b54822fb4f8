"""Task implementations behind ``hexnpc run``.

Each runner takes a validated :class:`ExperimentConfig` and an output
directory, writes its artifacts there and returns a JSON-serialisable
summary for the manifest.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Callable

import numpy as np

from .. import coupled_modes as cm
from .. import fock_states as fs
from ..dispersion import wavelength_from_omega
from ..qpm_geometry import (
    Branch,
    CrystalConfig,
    PumpConfig,
    ScanSpec,
    phase_matching_curve,
    shared_modes,
    write_curve_csv,
)
from ..wigner import (
    GridSpec,
    PumpPulse,
    SpectralMask,
    SplitStepModel,
    hot_spot_gain_exponent,
    hot_spot_intensity,
    predicted_hot_spots,
    shared_mismatch,
)
from ..wigner.analysis import gain_point, shared_line_ratio
from .campaign import run_cached
from .config import ExperimentConfig, Task
from .exports import write_csv

log = logging.getLogger(__name__)

__all__ = ["TASKS", "run_task", "build_crystal", "build_model", "MODE_DUMP_SCHEMA"]

MODE_DUMP_SCHEMA = "mode_intensities/1"


# --------------------------------------------------------------- builders
def build_crystal(cfg: ExperimentConfig) -> CrystalConfig:
    c = cfg.crystal
    return CrystalConfig.hexnpc_default(
        lambda_p=c.lambda_p_nm * 1e-9,
        lambda_s=None if c.lambda_s_nm is None else c.lambda_s_nm * 1e-9,
        poling_period=c.poling_period_um * 1e-6,
        length=c.length_mm * 1e-3,
        sellmeier_path=c.sellmeier,
        q_p=cfg.q_p,
        carrier_target=c.carrier,
    )


def _pump(cfg: ExperimentConfig, crystal: CrystalConfig) -> PumpConfig:
    return PumpConfig(cfg.q_p, cfg.pump.g0l / crystal.length, crystal.length)


def _pulse(cfg: ExperimentConfig, crystal: CrystalConfig) -> PumpPulse:
    p = cfg.pump
    return PumpPulse(
        wavelength=float(wavelength_from_omega(crystal.carrier("pump"))),
        duration_fwhm=p.duration_fwhm_ps * 1e-12,
        waist_x=p.waist_x_um * 1e-6,
        waist_y=p.waist_y_um * 1e-6,
        q_p=cfg.q_p,
        g0l=p.g0l,
        l_c=crystal.length,
        profile=p.profile,
    )


def _mask(cfg: ExperimentConfig, crystal: CrystalConfig, grid: GridSpec):
    kind = cfg.params.get("truncation", "none")
    if kind == "none":
        return None
    cells = SpectralMask.phase_matched_cells(crystal, grid, cfg.q_p,
                                             float(cfg.params.get("max_Dl", 2.0)))
    G_x = crystal.lattice.G_x
    if kind == "shared_signal":
        return SpectralMask.shared_signal(grid, cfg.q_p, G_x, cells)
    if kind == "resonant":
        return SpectralMask.resonant(grid, G_x, cells)
    raise ValueError(f"unknown truncation {kind!r}")


def build_model(cfg: ExperimentConfig, g0l: float | None = None) -> SplitStepModel:
    crystal = build_crystal(cfg)
    if g0l is not None:
        cfg = cfg.model_copy(update={"pump": cfg.pump.model_copy(update={"g0l": g0l})})
    grid = cfg.grid_spec()
    return SplitStepModel(crystal, grid, _pulse(cfg, crystal), steps=cfg.steps,
                          depletion=cfg.pump.depletion, mask=_mask(cfg, crystal, grid),
                          threads=cfg.threads)


def _state_dump(state, path: Path, **extra) -> None:
    cm.dump_state(state, path, **extra)


# ------------------------------------------------------------------ tasks
def task_qpm_curves(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    """Phase-matching curves per branch in the ``q_y = 0`` (q_x, Omega) plane."""
    crystal = build_crystal(cfg)
    pump = _pump(cfg, crystal)
    G_x = crystal.lattice.G_x
    prm = cfg.params
    lo, hi = prm.get("q_x_range_units", [-2.0, 2.0])
    n = int(prm.get("n_scan", 401))
    om = prm.get("omega_range_rad_s", [-6e13, 6e13])
    summary = {"branches": {}}
    for role in prm.get("roles", ["signal", "idler"]):
        scan = ScanSpec("q_x", np.linspace(lo * G_x, hi * G_x, n), "Omega", tuple(om),
                        fixed_value=0.0, role=role)
        for branch in Branch:
            pts = phase_matching_curve(crystal, pump, branch, scan)
            write_curve_csv(pts, out / f"curve_{role}_{branch.value}.csv", crystal)
            summary["branches"][f"{role}/{branch.value}"] = len(pts)
        sh = shared_modes(crystal, pump, ScanSpec("q_y", [0.0], "Omega", tuple(om), role=role))
        write_curve_csv(sh, out / f"shared_{role}.csv", crystal)
        summary[f"shared_{role}_Omega"] = [p.Omega for p in sh]
    return summary


def _pairs(cfg: ExperimentConfig, key: str, default):
    return [float(v) for v in cfg.params.get(key, default)]


def task_three_mode(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    crystal_len = cfg.crystal.length_mm * 1e-3
    rows, worst = [], 0.0
    for g0l in _pairs(cfg, "g0l_values", [0.5, 1, 2, 3, 4, 5]):
        for Dl in _pairs(cfg, "Dl_values", [0.0]):
            pump = PumpConfig(cfg.q_p, g0l / crystal_len, crystal_len)
            st = cm.solve_three_mode(pump, Dl / crystal_len)
            ref = cm.integrate_ode_oracle("three_mode", pump, Dl / crystal_len,
                                          steps=int(cfg.params.get("oracle_steps", 4000)))
            diff = float(np.max(np.abs(st.covariance - ref.covariance)))
            worst = max(worst, diff)
            n = st.mean_photon_numbers()
            rows.append((g0l, Dl, n["s0"], n["i1"], n["i2"], diff))
    write_csv(out / "three_mode.csv", "three_mode/1", rows)
    pump = PumpConfig(cfg.q_p, cfg.pump.g0l / crystal_len, crystal_len)
    Dl = float(cfg.params.get("dump_Dl", 0.0))
    state = cm.solve_three_mode(pump, Dl / crystal_len)
    _state_dump(state, out / "three_mode_state.json", g0l=cfg.pump.g0l, Dl=Dl)
    return {"points": len(rows), "oracle_max_abs_diff": worst}


def task_four_mode(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    crystal_len = cfg.crystal.length_mm * 1e-3
    rows, worst = [], 0.0
    for g0l in _pairs(cfg, "g0l_values", [1e-3, 0.5, 1, 2, 3, 4, 5]):
        for Dl in _pairs(cfg, "Dl_values", [0.0]):
            pump = PumpConfig(cfg.q_p, g0l / crystal_len, crystal_len)
            st = cm.solve_four_mode_resonant(pump, Dl / crystal_len)
            ref = cm.integrate_ode_oracle("four_mode", pump, Dl / crystal_len,
                                          steps=int(cfg.params.get("oracle_steps", 4000)))
            diff = float(np.max(np.abs(st.covariance - ref.covariance)))
            worst = max(worst, diff)
            n = st.mean_photon_numbers()
            rows.append((g0l, Dl, n["b_s"], n["c_s"], n["b_i"], n["c_i"], n["b_s"] / n["c_s"], diff))
    write_csv(out / "four_mode.csv", "four_mode/1", rows)
    pump = PumpConfig(cfg.q_p, cfg.pump.g0l / crystal_len, crystal_len)
    Dl = float(cfg.params.get("dump_Dl", 0.0))
    state = cm.solve_four_mode_resonant(pump, Dl / crystal_len)
    _state_dump(state, out / "four_mode_state.json", g0l=cfg.pump.g0l, Dl=Dl)
    return {"points": len(rows), "oracle_max_abs_diff": worst, "ratio_at_last": rows[-1][6]}


def task_fock_conditional(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    """Pair source with the idler split 50:50, conditioned on N signal photons."""
    crystal_len = cfg.crystal.length_mm * 1e-3
    g0l = float(cfg.params.get("g0l", 0.5))
    N_max = int(cfg.params.get("N_max", 30))
    coeff = cm.bogoliubov(g0l / crystal_len, 1.0, 0.0, crystal_len)
    state = fs.split_idler_state(fs.tmsv_amplitudes(coeff, N_max))
    rows, exact = [], True
    for N in [int(v) for v in cfg.params.get("N_values", range(0, 11))]:
        cond = fs.condition_on_signal(state, N)
        probs = [abs(cond.amplitudes[k, N - k]) ** 2 for k in range(N + 1)]
        split = fs.split_distribution_exact(N)
        binom = fs.binomial_exact(N)
        exact &= split == binom
        for k in range(N + 1):
            rows.append((N, k, N - k, str(split[k]), repr(float(probs[k])), str(binom[k])))
    write_csv(out / "fock_conditional.csv", "fock_conditional/1", rows)
    return {"g0l": g0l, "N_max": N_max, "split_equals_binomial": bool(exact),
            "norm_deficit": float(state.norm_deficit)}


def task_fibonacci(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    z_max = float(cfg.params.get("g0z_max", 20.0))
    steps = int(cfg.params.get("steps", 4000))
    tr = cm.quadrature_fibonacci(1.0, z_max, steps)
    write_csv(out / "fibonacci.csv", "fibonacci/1",
              ((z, b, c, b / c if c else math.inf, br)
               for z, b, c, br in zip(tr.z, tr.B, tr.C, tr.B_recursion)))
    ints = cm.fibonacci_integers(int(cfg.params.get("n_integers", 15)))
    write_csv(out / "fibonacci_integers.csv", "fibonacci_integers/1",
              ((k + 1, F, N, F / N if N else math.inf) for k, (F, N) in enumerate(ints)))
    return {"final_ratio": tr.ratio, "ratio_error": abs(tr.ratio - cm.PHI),
            "eigenvalues": tr.eigenvalues.tolist()}


def _cache(cfg: ExperimentConfig, out: Path) -> Path:
    return Path(cfg.params.get("checkpoint_dir", out / "checkpoints"))


def _mode_dumps(cfg, model: SplitStepModel, smap, out: Path) -> dict:
    """Analytic and simulated photon numbers on a truncated spectral support."""
    crystal, grid, pulse = model.crystal, model.grid, model.pulse
    G_x = crystal.lattice.G_x
    mask = model.mask
    cells = SpectralMask.phase_matched_cells(crystal, grid, cfg.q_p,
                                             float(cfg.params.get("max_Dl", 2.0)))
    D = shared_mismatch(crystal, grid, cfg.q_p)[cells]

    def total(role, q):
        ix = grid.qx_index(q)
        sel = (mask.signal if role == "signal" else mask.idler)[ix]
        return float(smap.data(role)[ix][sel].sum())

    if cfg.params.get("truncation") == "shared_signal":
        v2 = np.array([abs(cm.bogoliubov(pulse.g0, math.sqrt(2), d, pulse.l_c).V) ** 2 for d in D])
        analytic = {"s0": v2.sum(), "i1": v2.sum() / 2, "i2": v2.sum() / 2}
        simulated = {"s0": total("signal", cfg.q_p), "i1": total("idler", -G_x),
                     "i2": total("idler", G_x)}
    else:
        vp = np.array([abs(cm.bogoliubov(pulse.g0, cm.PHI, d, pulse.l_c).V) ** 2 for d in D])
        vm = np.array([abs(cm.bogoliubov(pulse.g0, -1 / cm.PHI, d, pulse.l_c).V) ** 2 for d in D])
        nb = float(((cm.PHI**2 * vp + vm) / (1 + cm.PHI**2)).sum())
        nc = float(((vp + cm.PHI**2 * vm) / (1 + cm.PHI**2)).sum())
        b, c = cfg.q_p, -cfg.q_p
        analytic = {"b_s": nb, "c_s": nc, "b_i": nb, "c_i": nc}
        simulated = {"b_s": total("signal", b), "c_s": total("signal", c),
                     "b_i": total("idler", b), "c_i": total("idler", c)}
    labels = list(analytic)
    meta = {"cells": int(cells.sum()), "g0l": pulse.g0l, "realizations": smap.n_realizations}
    for name, vals, src in (("analytic_modes.json", analytic, "analytic"),
                            ("simulated_modes.json", simulated, "wigner")):
        (out / name).write_text(json.dumps({
            "schema": MODE_DUMP_SCHEMA, "source": src, "mode_labels": labels,
            "intensities": {k: float(v) for k, v in vals.items()}, "meta": meta}, indent=2))
    return {"analytic": analytic, "simulated": simulated}


def task_wigner_run(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    model = build_model(cfg)
    res = run_cached(model, cfg.seed, cfg.ensemble_size, "wigner_run", _cache(cfg, out), progress)
    smap = res.spectral_map
    smap.meta.update({"seed": cfg.seed, "config_task": cfg.task.value})
    smap.save(out / "spectral_map.npz")
    np.savez_compressed(out / "qy0_slices.npz", signal=res.signal_slices, idler=res.idler_slices)
    summary = {"realizations": smap.n_realizations, "seconds": res.seconds,
               "resumed_from": res.resumed_from}
    for role in ("signal", "idler"):
        smap.write_section_csv(out / f"{role}_qx_Omega.csv", role, "qx_Omega", 0.0)
        smap.write_section_csv(out / f"{role}_qy_Omega.csv", role, "qy_Omega", cfg.q_p)
    if model.mask is not None:
        summary["modes"] = _mode_dumps(cfg, model, smap, out)
        return summary
    rows = []
    for hs in predicted_hot_spots(model.crystal, model.grid, cfg.q_p):
        lam = float(wavelength_from_omega(smap.carrier(hs.role) + hs.Omega)) * 1e9
        rows.append((hs.role, hs.kind, hs.q_x, hs.q_y, hs.Omega, lam,
                     hot_spot_intensity(smap, hs.role, hs.q_x, hs.Omega)))
    write_csv(out / "hot_spots.csv", "hot_spots/1", rows)
    summary["hot_spots"] = len(rows)
    if abs(abs(cfg.pump.q_p_units) - 1) < 1e-6:
        summary["line_ratio"] = {r: shared_line_ratio(smap, r, cfg.q_p) for r in ("signal", "idler")}
    return summary


def task_gain_exponent_sweep(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    rows = []
    for g0l in _pairs(cfg, "g0l_values", [3.0, 4.0, 5.0]):
        model = build_model(cfg, g0l)
        res = run_cached(model, cfg.seed, cfg.ensemble_size, f"gain_{g0l:g}", _cache(cfg, out),
                         progress)
        bg, hs = gain_point(res.spectral_map, model.crystal, cfg.q_p)
        rows.append((g0l, bg, hs, res.spectral_map.n_realizations))
    write_csv(out / "gain_sweep.csv", "gain_sweep/1", rows)
    fit = hot_spot_gain_exponent([r[1] for r in rows], [r[2] for r in rows])
    doc = {k: getattr(fit, k) for k in fit.__dataclass_fields__}
    (out / "gain_fit.json").write_text(json.dumps(doc, indent=2))
    return doc


TASKS: dict[Task, Callable[[ExperimentConfig, Path, Callable | None], dict]] = {
    Task.qpm_curves: task_qpm_curves,
    Task.three_mode: task_three_mode,
    Task.four_mode: task_four_mode,
    Task.fock_conditional: task_fock_conditional,
    Task.fibonacci: task_fibonacci,
    Task.wigner_run: task_wigner_run,
    Task.gain_exponent_sweep: task_gain_exponent_sweep,
}


def run_task(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    return TASKS[cfg.task](cfg, Path(out), progress)
