"""Hexagonal reciprocal lattice, QPM mismatch functions and phase-matching surfaces.

Conventions
-----------
A Fourier mode is ``w = (q_x, q_y, Omega)`` with ``Omega`` the offset from the
carrier of its wave. The two fundamental lattice vectors carry transverse
components ``-G_x`` (branch ``G01``) and ``+G_x`` (branch ``G10``), both with
longitudinal component ``-G_z``. A signal mode ``w_s`` is coupled through
branch ``G01``/``G10`` to the idler ``w_0p - w_s -/+ G_x e_x`` where
``w_0p = (q_p, 0, 0)`` is the tilted plane-wave pump.

All functions accept a mode of role ``"idler"`` as well: the roles of signal
and idler are then exchanged, which gives the dual (shared-idler) geometry.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dispersion import (
    SellmeierModel,
    WaveTriplet,
    kz_array,
    load_sellmeier,
    omega_from_wavelength,
    wavelength_from_omega,
)
from .errors import EvanescentModeError, WavelengthRangeError

__all__ = [
    "Branch",
    "LatticeConfig",
    "ModeCoordinate",
    "PumpConfig",
    "CrystalConfig",
    "ScanSpec",
    "CurvePoint",
    "mismatch_D",
    "mismatch_D_array",
    "full_mismatch_DD",
    "phase_matching_curve",
    "shared_modes",
    "coupled_partners",
    "resonance_detuning",
    "solve_signal_carrier",
    "write_curve_csv",
    "CURVE_CSV_HEADER",
    "CURVE_CSV_SCHEMA",
]

ROLES = ("signal", "idler", "pump")
D01_OVER_D33 = 0.29


class Branch(str, Enum):
    G01 = "G01"
    G10 = "G10"

    @property
    def sign(self) -> int:
        """Sign of the transverse lattice component: -1 for G01, +1 for G10."""
        return -1 if self is Branch.G01 else 1

    @property
    def other(self) -> "Branch":
        return Branch.G10 if self is Branch.G01 else Branch.G01


@dataclass(frozen=True)
class LatticeConfig:
    """Hexagonal poling: period and the two fundamental reciprocal vectors."""

    poling_period: float
    d33: float = 17e-12
    d01: float | None = None
    G_x: float = field(init=False)
    G_z: float = field(init=False)

    def __post_init__(self):
        if not self.poling_period > 0:
            raise ValueError("poling_period must be positive")
        object.__setattr__(self, "G_z", 2 * math.pi / self.poling_period)
        object.__setattr__(self, "G_x", 2 * math.pi / (math.sqrt(3) * self.poling_period))
        if self.d01 is None:
            object.__setattr__(self, "d01", D01_OVER_D33 * self.d33)

    @classmethod
    def litao3(cls, poling_period: float = 8.3e-6) -> "LatticeConfig":
        # d33 = 17 pm/V (pm/V, not pV/m); d01 = d10 ~= 0.29 d33 for the hexagonal
        # pattern. Gains are configured as g0 l_c, so d33 never changes a result.
        return cls(poling_period=poling_period, d33=17e-12)

    @property
    def transverse_period(self) -> float:
        """Spatial period 2 pi / G_x of the cos(G_x x) modulation."""
        return 2 * math.pi / self.G_x


@dataclass(frozen=True)
class ModeCoordinate:
    q_x: float
    q_y: float
    Omega: float
    role: str = "signal"

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}")
        if not all(math.isfinite(v) for v in (self.q_x, self.q_y, self.Omega)):
            raise ValueError("mode coordinates must be finite")


@dataclass(frozen=True)
class PumpConfig:
    """Plane-wave pump of the parametric limit: tilt, gain, crystal length."""

    q_p: float
    g0: float
    l_c: float

    def __post_init__(self):
        if self.g0 < 0:
            raise ValueError("g0 must be >= 0")
        if not self.l_c > 0:
            raise ValueError("l_c must be > 0")

    @property
    def gain(self) -> float:
        return self.g0 * self.l_c


@dataclass(frozen=True)
class CrystalConfig:
    lattice: LatticeConfig
    dispersion: Mapping[str, SellmeierModel]
    waves: WaveTriplet
    length: float = 10e-3

    def __post_init__(self):
        missing = [r for r in ROLES if r not in self.dispersion]
        if missing:
            raise ValueError(f"dispersion models missing for {missing}")
        if not self.length > 0:
            raise ValueError("crystal length must be > 0")

    def carrier(self, role: str) -> float:
        return self.waves.carrier(role)

    def kz(self, role, q2, Omega, check=True):
        """Vectorised ``(kz, propagating)`` for wave ``role``."""
        return kz_array(self.dispersion[role], self.carrier(role), q2, Omega, check=check)

    def k0(self, role: str) -> float:
        """On-axis carrier wave number k_j(0, 0)."""
        return float(self.kz(role, 0.0, 0.0)[0])

    def swapped(self) -> "CrystalConfig":
        """Same crystal with signal and idler roles exchanged."""
        disp = dict(self.dispersion)
        disp["signal"], disp["idler"] = self.dispersion["idler"], self.dispersion["signal"]
        return replace(self, dispersion=disp, waves=self.waves.swapped())

    @classmethod
    def hexnpc_default(
        cls,
        lambda_p: float = 527.5e-9,
        lambda_s: float | None = None,
        poling_period: float = 8.3e-6,
        length: float = 10e-3,
        sellmeier_path=None,
        q_p: float | None = None,
        carrier_target: str = "midpoint",
    ) -> "CrystalConfig":
        """Hexagonally poled LiTaO3 with Lambda = 8.3 um pumped at 527.5 nm.

        If ``lambda_s`` is omitted the signal carrier is solved for pump tilt
        ``q_p`` (default 0): ``carrier_target="midpoint"`` places it midway
        between the on-axis shared-signal and shared-idler phase-matching
        frequencies, ``"shared_signal"``/``"shared_idler"`` on either one.
        See :func:`solve_signal_carrier`.
        """
        lattice = LatticeConfig.litao3(poling_period)
        models = load_sellmeier(sellmeier_path)
        omega_p = float(omega_from_wavelength(lambda_p))
        if lambda_s is None:
            omega_s = solve_signal_carrier(lattice, models, omega_p, q_p or 0.0, target=carrier_target)
        else:
            omega_s = float(omega_from_wavelength(lambda_s))
        return cls(lattice, models, WaveTriplet(omega_p, omega_s), length)


def _opposite(role: str) -> str:
    return "idler" if role == "signal" else "signal"


def mismatch_D_array(crystal: CrystalConfig, q_p, q_x, q_y, Omega, branch, role="signal"):
    """Vectorised parametric-limit mismatch D for modes of ``role``.

    Returns ``(D, propagating)``; non-propagating entries are NaN.
    """
    branch = Branch(branch)
    if role == "idler":
        crystal = crystal.swapped()
    elif role != "signal":
        raise ValueError("role must be 'signal' or 'idler'")
    G = crystal.lattice
    q_x, q_y, Omega = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (q_x, q_y, Omega)))
    kzs, ok_s = crystal.kz("signal", q_x**2 + q_y**2, Omega)
    qix = q_p - q_x + branch.sign * G.G_x
    kzi, ok_i = crystal.kz("idler", qix**2 + q_y**2, -Omega)
    kzp, ok_p = crystal.kz("pump", q_p**2, 0.0)
    ok = ok_s & ok_i & bool(ok_p)
    D = kzs + kzi - kzp + G.G_z
    return np.where(ok, D, np.nan), ok


def _raise_if_evanescent(crystal, role, q2, Omega):
    k = crystal.kz(role, 0.0, Omega)[0]
    deficit = float(q2 - k**2)
    if deficit > 0:
        raise EvanescentModeError(deficit)


def mismatch_D(crystal: CrystalConfig, pump: PumpConfig, w_s: ModeCoordinate, branch) -> float:
    """QPM function in the parametric limit.

    ``D = k_sz(q_sx, q_sy, W) + k_iz(q_p - q_sx -/+ G_x, -q_sy, -W) - k_pz(q_p, 0, 0) + G_z``
    with ``-`` for branch G01 and ``+`` for G10.

    Raises
    ------
    EvanescentModeError
        If the signal, its partner idler or the pump is evanescent.
    """
    branch = Branch(branch)
    D, ok = mismatch_D_array(crystal, pump.q_p, w_s.q_x, w_s.q_y, w_s.Omega, branch, w_s.role)
    if not bool(ok):
        cr = crystal.swapped() if w_s.role == "idler" else crystal
        qix = pump.q_p - w_s.q_x + branch.sign * cr.lattice.G_x
        _raise_if_evanescent(cr, "signal", w_s.q_x**2 + w_s.q_y**2, w_s.Omega)
        _raise_if_evanescent(cr, "idler", qix**2 + w_s.q_y**2, -w_s.Omega)
        _raise_if_evanescent(cr, "pump", pump.q_p**2, 0.0)
    return float(D)


def full_mismatch_DD(
    crystal: CrystalConfig, w_s: ModeCoordinate, w_p: ModeCoordinate, branch
) -> float:
    """Mismatch for an arbitrary pump Fourier component ``w_p``.

    ``DD = k_sz(w_s) + k_iz(w_p - w_s -/+ G_x e_x) - k_pz(w_p) + G_z``.
    Reduces to :func:`mismatch_D` at ``w_p = (q_p, 0, 0)``.
    """
    branch = Branch(branch)
    cr = crystal.swapped() if w_s.role == "idler" else crystal
    G = cr.lattice
    qix = w_p.q_x - w_s.q_x + branch.sign * G.G_x
    qiy = w_p.q_y - w_s.q_y
    Wi = w_p.Omega - w_s.Omega
    parts = (
        ("signal", w_s.q_x**2 + w_s.q_y**2, w_s.Omega),
        ("idler", qix**2 + qiy**2, Wi),
        ("pump", w_p.q_x**2 + w_p.q_y**2, w_p.Omega),
    )
    vals = []
    for role, q2, W in parts:
        k, ok = cr.kz(role, q2, W)
        if not bool(ok):
            _raise_if_evanescent(cr, role, q2, W)
        vals.append(float(k))
    return vals[0] + vals[1] - vals[2] + G.G_z


def coupled_partners(w: ModeCoordinate, pump: PumpConfig, lattice: LatticeConfig):
    """The two conjugate modes coupled to ``w`` through G01 and G10 (in that order)."""
    role = _opposite(w.role)
    return tuple(
        ModeCoordinate(pump.q_p - w.q_x + b.sign * lattice.G_x, -w.q_y, -w.Omega, role)
        for b in (Branch.G01, Branch.G10)
    )


def resonance_detuning(pump: PumpConfig, lattice: LatticeConfig) -> float:
    """min(|q_p - G_x|, |q_p + G_x|) / G_x; zero at superresonance."""
    G = lattice.G_x
    return min(abs(pump.q_p - G), abs(pump.q_p + G)) / G


AXES = ("q_x", "q_y", "Omega")


@dataclass(frozen=True)
class ScanSpec:
    """One family of 1D root searches.

    For every value of ``scan_axis`` in ``scan_values``, roots of D are
    searched along ``solve_axis`` inside ``solve_range``; the third axis is
    held at ``fixed_value``.
    """

    scan_axis: str
    scan_values: Sequence[float]
    solve_axis: str
    solve_range: tuple[float, float]
    fixed_value: float = 0.0
    n_grid: int = 2048
    tol_root: float | None = None
    role: str = "signal"

    def __post_init__(self):
        if self.scan_axis not in AXES or self.solve_axis not in AXES:
            raise ValueError(f"axes must be among {AXES}")
        if self.scan_axis == self.solve_axis:
            raise ValueError("scan_axis and solve_axis must differ")
        lo, hi = self.solve_range
        if not lo < hi:
            raise ValueError("solve_range must be increasing")
        if self.n_grid < 3:
            raise ValueError("n_grid must be >= 3")

    @property
    def fixed_axis(self) -> str:
        return next(a for a in AXES if a not in (self.scan_axis, self.solve_axis))


@dataclass(frozen=True)
class CurvePoint:
    q_x: float
    q_y: float
    Omega: float
    branch: Branch
    residual: float
    tangency: bool = False
    role: str = "signal"

    def mode(self) -> ModeCoordinate:
        return ModeCoordinate(self.q_x, self.q_y, self.Omega, self.role)


def _roots_1d(f, xs, tol, resolution):
    """Sign-change roots of ``f`` on grid ``xs`` plus tangential minima of |f|."""
    vals = f(xs)
    roots = []  # (x, residual, tangency)
    finite = np.isfinite(vals)

    def polish(a, b):
        x = brentq(lambda t: float(f(np.array(t))), a, b, xtol=1e-15 * max(abs(a), abs(b), 1.0), rtol=4 * np.finfo(float).eps, maxiter=200)
        return x, abs(float(f(np.array(x))))

    for i in np.flatnonzero(finite):
        if vals[i] == 0.0:
            roots.append((float(xs[i]), 0.0, False))
    for i in range(len(xs) - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a == 0.0 or b == 0.0:
            continue
        if a * b < 0:
            x, r = polish(xs[i], xs[i + 1])
            roots.append((x, r, False))
            continue
    # local extrema of f that approach zero without a grid-level sign change
    for i in range(1, len(xs) - 1):
        a, m, b = vals[i - 1], vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(m) and np.isfinite(b)):
            continue
        if not (a * m > 0 and m * b > 0):
            continue
        s = np.sign(m)
        if not (s * m <= s * a and s * m <= s * b):
            continue
        res = minimize_scalar(
            lambda t: s * float(f(np.array(t))),
            bounds=(xs[i - 1], xs[i + 1]),
            method="bounded",
            options={"xatol": resolution * 1e-3},
        )
        xm, fm = float(res.x), s * float(res.fun)
        if np.sign(fm) != s and fm != 0.0:
            # two close roots inside one grid cell
            for lo, hi in ((xs[i - 1], xm), (xm, xs[i + 1])):
                x, r = polish(lo, hi)
                roots.append((x, r, False))
        elif abs(fm) < tol:
            roots.append((xm, abs(fm), True))
    roots.sort()
    merged = []
    for x, r, t in roots:
        if merged and abs(x - merged[-1][0]) <= resolution:
            px, pr, pt = merged[-1]
            merged[-1] = (px if pr <= r else x, min(pr, r), pt or t)
        else:
            merged.append((x, r, t))
    return [(x, r, t) for x, r, t in merged if r < tol]


def phase_matching_curve(
    crystal: CrystalConfig, pump: PumpConfig, branch, scan: ScanSpec
) -> list[CurvePoint]:
    """Roots of D along ``scan.solve_axis`` for each scan value.

    Every returned point has ``|D| < tol_root`` (default ``1e-6 G_z``).
    Double roots where D only touches zero are reported once with
    ``tangency=True``. Scan points without a root contribute nothing.
    Output is sorted by (scan value, solve value).
    """
    branch = Branch(branch)
    tol = scan.tol_root if scan.tol_root is not None else 1e-6 * crystal.lattice.G_z
    lo, hi = scan.solve_range
    xs = np.linspace(lo, hi, scan.n_grid)
    resolution = 1e-6 * (xs[1] - xs[0])
    points = []
    for v in sorted(float(s) for s in scan.scan_values):
        coords = {scan.scan_axis: v, scan.fixed_axis: scan.fixed_value}

        def f(t, coords=coords):
            c = dict(coords)
            c[scan.solve_axis] = t
            D, _ = mismatch_D_array(
                crystal, pump.q_p, c["q_x"], c["q_y"], c["Omega"], branch, scan.role
            )
            return D

        for x, r, tang in _roots_1d(f, xs, tol, resolution):
            c = dict(coords)
            c[scan.solve_axis] = x
            points.append(CurvePoint(c["q_x"], c["q_y"], c["Omega"], branch, r, tang, scan.role))
    return points


def shared_modes(crystal: CrystalConfig, pump: PumpConfig, scan: ScanSpec) -> list[CurvePoint]:
    """Modes phase-matched by both lattice vectors (D1 = D2 = 0).

    The x-component is imposed, ``q_x = q_p``; ``scan`` must therefore scan
    and solve over ``q_y`` and ``Omega``. With ``scan.role == "idler"`` the
    dual shared-idler line is returned.
    """
    if "q_x" in (scan.scan_axis, scan.solve_axis):
        raise ValueError("shared modes have q_x = q_p imposed; scan over q_y and Omega")
    scan = replace(scan, fixed_value=pump.q_p)
    pts = phase_matching_curve(crystal, pump, Branch.G01, scan)
    tol = scan.tol_root if scan.tol_root is not None else 1e-6 * crystal.lattice.G_z
    out = []
    for p in pts:
        D2, ok = mismatch_D_array(crystal, pump.q_p, p.q_x, p.q_y, p.Omega, Branch.G10, p.role)
        if bool(ok) and abs(float(D2)) < tol:
            out.append(p)
    return out


def solve_signal_carrier(
    lattice: LatticeConfig,
    models: Mapping[str, SellmeierModel],
    omega_p: float,
    q_p: float = 0.0,
    target: str = "shared_signal",
    bracket=(0.51, 0.95),
) -> float:
    """Signal carrier that phase-matches an on-axis shared mode.

    ``target="shared_signal"``: the shared signal at (q_p, 0, 0) is matched;
    ``"shared_idler"``: the shared idler at (q_p, 0, 0) is matched;
    ``"midpoint"``: the mean of the two, so both triplets sit inside a
    symmetric frequency window.
    """
    if target == "midpoint":
        a = solve_signal_carrier(lattice, models, omega_p, q_p, "shared_signal", bracket)
        b = solve_signal_carrier(lattice, models, omega_p, q_p, "shared_idler", bracket)
        return 0.5 * (a + b)
    role = {"shared_signal": "signal", "shared_idler": "idler"}[target]

    def D(omega_s):
        cr = CrystalConfig(lattice, models, WaveTriplet(omega_p, omega_s))
        val, ok = mismatch_D_array(cr, q_p, q_p, 0.0, 0.0, Branch.G01, role)
        return float(val)

    def D_or_nan(omega_s):
        try:
            return D(omega_s)
        except WavelengthRangeError:
            return math.nan

    grid = np.linspace(bracket[0] * omega_p, bracket[1] * omega_p, 400)
    vals = np.array([D_or_nan(w) for w in grid])
    idx = np.flatnonzero(np.isfinite(vals[:-1]) & (vals[:-1] * vals[1:] < 0))
    if idx.size == 0:
        raise ValueError("no phase-matched signal carrier in the bracket")
    i = idx[0]
    return brentq(D, grid[i], grid[i + 1], xtol=1e-6, rtol=1e-15)


CURVE_CSV_SCHEMA = "qpm_curve/1"
CURVE_CSV_HEADER = (
    "Omega_rad_s",
    "lambda_nm",
    "q_y_rad_m",
    "branch",
    "residual",
    "tangency_flag",
    "q_x_rad_m",
)


def write_curve_csv(points: Sequence[CurvePoint], path, crystal: CrystalConfig) -> Path:
    """Export phase-matching points; wavelength of the mode's own wave."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {CURVE_CSV_SCHEMA}\n")
        w = csv.writer(fh)
        w.writerow(CURVE_CSV_HEADER)
        for p in points:
            lam = float(wavelength_from_omega(crystal.carrier(p.role) + p.Omega)) * 1e9
            w.writerow(
                [
                    repr(p.Omega),
                    f"{lam:.9f}",
                    repr(p.q_y),
                    p.branch.value,
                    f"{p.residual:.6e}",
                    int(p.tangency),
                    repr(p.q_x),
                ]
            )
    return path
