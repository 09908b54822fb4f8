"""Named Wigner simulation cases with on-disk, resumable ensembles."""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

from ..dispersion import wavelength_from_omega
from ..qpm_geometry import CrystalConfig, LatticeConfig
from ..wigner import EnsembleResult, GridSpec, PumpPulse, SplitStepModel, run_ensemble
from ..wigner.ensemble import model_fingerprint

log = logging.getLogger(__name__)

__all__ = ["WignerCase", "build_case", "run_case", "run_cached", "default_cache_dir",
           "STRUCTURE_CASES", "GAIN_SWEEP_CASES"]

PROFILES = ("desk", "wide", "paper")


def default_cache_dir() -> Path:
    env = os.environ.get("HEXNPC_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "hexnpc" / "cases"


@dataclass(frozen=True)
class WignerCase:
    """One full-grid simulation: pump tilt in units of ``G_x`` and gain ``g0 l_c``."""

    q_p_units: float
    g0l: float
    realizations: int = 50
    steps: int = 100
    seed: int = 1
    profile: str = "desk"
    duration_fwhm: float = 10e-12
    waist_x: float = 300e-6
    waist_y: float = 200e-6
    depletion: bool = False

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if self.realizations < 1 or self.steps < 1:
            raise ValueError("realizations and steps must be >= 1")

    def label(self) -> str:
        return f"{self.profile}_qp{self.q_p_units:+g}_g{self.g0l:g}"

    def to_dict(self) -> dict:
        return asdict(self)


def build_case(case: WignerCase, threads: int = 1, fft_backend: str = "auto"):
    """Crystal, grid, pulse and model for ``case``.

    The signal carrier is solved at the case's pump tilt so that both hot-spot
    triplets fall inside the frequency window.
    """
    lattice = LatticeConfig.litao3()
    q_p = case.q_p_units * lattice.G_x
    crystal = CrystalConfig.hexnpc_default(q_p=q_p)
    if case.profile == "desk":
        grid = GridSpec.desk(lattice)
    elif case.profile == "wide":
        # desk sampling on a doubled x window, room for a waist up to 600 um
        grid = GridSpec.for_lattice(lattice, 512, 64, 256, 170, 800e-6, 40e-12)
    else:
        grid = GridSpec.paper(lattice)
    pulse = PumpPulse(
        wavelength=float(wavelength_from_omega(crystal.carrier("pump"))),
        duration_fwhm=case.duration_fwhm,
        waist_x=case.waist_x,
        waist_y=case.waist_y,
        q_p=q_p,
        g0l=case.g0l,
        l_c=crystal.length,
    )
    problems = grid.check(lattice, q_p) + pulse.check(grid)
    if problems:
        raise ValueError("; ".join(problems))
    model = SplitStepModel(crystal, grid, pulse, steps=case.steps, depletion=case.depletion,
                           threads=threads, fft_backend=fft_backend)
    return model


def run_cached(
    model: SplitStepModel,
    seed: int,
    realizations: int,
    label: str,
    cache_dir=None,
    progress: Callable[[int, int], None] | None = None,
) -> EnsembleResult:
    """Ensemble with checkpoints under ``cache_dir/<label>-<fingerprint>``.

    A complete checkpoint is returned without recomputation and a partial
    one is extended, so interrupted or enlarged runs never repeat work.
    """
    root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    fp = model_fingerprint(model, seed)
    ckpt = root / f"{label}-{fp[:16]}"
    log.info("ensemble %s -> %s", label, ckpt)
    result = run_ensemble(model, seed, realizations, checkpoint_dir=ckpt, progress=progress)
    result.meta["checkpoint"] = str(ckpt)
    return result


def run_case(
    case: WignerCase,
    cache_dir=None,
    threads: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> tuple[SplitStepModel, EnsembleResult]:
    """Run, resume or reload the ensemble for ``case``."""
    model = build_case(case, threads)
    result = run_cached(model, case.seed, case.realizations, case.label(), cache_dir, progress)
    result.meta["case"] = case.to_dict()
    return model, result


# Cases behind the slow acceptance checks: hot-spot structure on the desk grid,
# and the gain sweep on the wide grid (plane-wave-like pump).
STRUCTURE_CASES = (WignerCase(0.0, 5.0), WignerCase(-1.0, 5.0))
GAIN_SWEEP_CASES = tuple(
    WignerCase(q, g, realizations=10, profile="wide", waist_x=600e-6)
    for q in (0.0, -1.0) for g in (3.0, 4.0, 5.0)
)


def main(argv=None) -> int:
    """Fill the case cache: ``python -m hexnpc.cli_io.campaign [structure|gain|all]``."""
    import argparse
    import time

    p = argparse.ArgumentParser(prog="python -m hexnpc.cli_io.campaign", description=main.__doc__)
    p.add_argument("which", nargs="?", default="all", choices=("structure", "gain", "all"))
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args(argv)
    cases = {"structure": STRUCTURE_CASES, "gain": GAIN_SWEEP_CASES,
             "all": STRUCTURE_CASES + GAIN_SWEEP_CASES}[args.which]
    for case in cases:
        t0 = time.perf_counter()
        _, res = run_case(case, threads=args.threads,
                          progress=lambda r, n: print(f"  {case.label()} {r}/{n}", flush=True))
        print(f"{case.label()}: {res.spectral_map.n_realizations} realizations, "
              f"{time.perf_counter() - t0:.0f} s ({res.meta['checkpoint']})", flush=True)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
