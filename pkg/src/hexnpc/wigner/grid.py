"""Simulation grids, the classical pump pulse and per-realization fields.

Normalisation
-------------
Field arrays hold per-cell amplitudes: ``sum |A|^2`` over the grid is the
photon number in the window, and with the orthonormal DFT the spectral
array holds per-mode amplitudes with the same property. Vacuum in symmetric
ordering is then complex white noise with ``E|A|^2 = 1/2`` in every cell
and in every Fourier mode.

Spectral coordinates follow ``A(x, t) = sum A(q, Omega) exp(i q x - i Omega t)``,
so ``q = 2 pi fftfreq`` and ``Omega = -2 pi fftfreq`` for the DFT.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..qpm_geometry import LatticeConfig

__all__ = ["GridSpec", "PumpPulse", "FieldGrid", "make_rng"]


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class GridSpec:
    n_x: int
    n_y: int
    n_t: int
    L_x: float
    L_y: float
    T: float

    def __post_init__(self):
        for name in ("n_x", "n_y", "n_t"):
            if not _is_pow2(getattr(self, name)):
                raise ValueError(f"{name} must be a power of two")
        for name in ("L_x", "L_y", "T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_lattice(cls, lattice: LatticeConfig, n_x, n_y, n_t, periods_x, L_y, T):
        """Window ``L_x = periods_x * 2 pi / G_x`` so that ``G_x`` sits on the q grid."""
        return cls(n_x, n_y, n_t, periods_x * lattice.transverse_period, L_y, T)

    @classmethod
    def desk(cls, lattice: LatticeConfig) -> "GridSpec":
        return cls.for_lattice(lattice, 256, 64, 256, 85, 800e-6, 40e-12)

    @classmethod
    def paper(cls, lattice: LatticeConfig) -> "GridSpec":
        return cls.for_lattice(lattice, 512, 256, 512, 170, 1600e-6, 80e-12)

    @property
    def shape(self):
        return (self.n_x, self.n_y, self.n_t)

    @property
    def dx(self):
        return self.L_x / self.n_x

    @property
    def dy(self):
        return self.L_y / self.n_y

    @property
    def dt(self):
        return self.T / self.n_t

    @property
    def cell(self):
        return self.dx * self.dy * self.dt

    @property
    def x(self):
        return (np.arange(self.n_x) - self.n_x // 2) * self.dx

    @property
    def y(self):
        return (np.arange(self.n_y) - self.n_y // 2) * self.dy

    @property
    def t(self):
        return (np.arange(self.n_t) - self.n_t // 2) * self.dt

    @property
    def q_x(self):
        return 2 * np.pi * np.fft.fftfreq(self.n_x, self.dx)

    @property
    def q_y(self):
        return 2 * np.pi * np.fft.fftfreq(self.n_y, self.dy)

    @property
    def Omega(self):
        return -2 * np.pi * np.fft.fftfreq(self.n_t, self.dt)

    @property
    def dq_x(self):
        return 2 * np.pi / self.L_x

    @property
    def q_x_max(self):
        return np.pi / self.dx

    def q2(self):
        """|q|^2 broadcast to (n_x, n_y, 1)."""
        return self.q_x[:, None, None] ** 2 + self.q_y[None, :, None] ** 2

    def qx_index(self, q: float, tol: float = 1e-9) -> int:
        """FFT index of an on-grid ``q_x`` value; raises if ``q`` is off-grid."""
        m = q / self.dq_x
        k = round(m)
        if abs(m - k) > tol * max(1.0, abs(m)):
            raise ValueError(f"q_x = {q:.6g} is not on the grid (spacing {self.dq_x:.6g})")
        if not -self.n_x // 2 <= k < self.n_x // 2:
            raise ValueError(f"q_x = {q:.6g} outside the spectral window")
        return k % self.n_x

    def check(self, lattice: LatticeConfig, q_p: float = 0.0) -> list[str]:
        """Resolution requirements; returns a list of violations."""
        problems = []
        if self.q_x_max < 1.5 * lattice.G_x:
            problems.append(
                f"q_x window {self.q_x_max:.4g} rad/m must reach 1.5 G_x = {1.5 * lattice.G_x:.4g}"
            )
        # tilt phase exp(i q_p x) must be below Nyquist: |q_p| < (2 pi / dx) / 2
        if abs(q_p) >= self.q_x_max:
            problems.append(f"pump tilt {q_p:.4g} rad/m not resolved by the x grid")
        return problems

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PumpPulse:
    """Classical pump: Gaussian in x, y and t (or a plane wave).

    ``waist_x``/``waist_y`` are 1/e^2 intensity radii; ``duration_fwhm`` is
    the intensity FWHM. The peak amplitude is set by ``g0l``: at the pulse
    centre ``chi |A_p| = g0 = g0l / l_c``. ``peak_photons_per_cell`` fixes
    the pump photon scale and only matters with pump depletion.
    """

    wavelength: float = 527.5e-9
    duration_fwhm: float = 10e-12
    waist_x: float = 300e-6
    waist_y: float = 200e-6
    q_p: float = 0.0
    g0l: float = 5.0
    l_c: float = 10e-3
    peak_photons_per_cell: float = 1e6
    profile: str = "gaussian"

    def __post_init__(self):
        if self.profile not in ("gaussian", "plane"):
            raise ValueError("profile must be 'gaussian' or 'plane'")
        if self.g0l < 0 or not self.l_c > 0 or not self.peak_photons_per_cell > 0:
            raise ValueError("need g0l >= 0, l_c > 0 and a positive photon scale")

    @property
    def g0(self) -> float:
        return self.g0l / self.l_c

    @property
    def tau(self) -> float:
        """1/e amplitude half-width in time."""
        return self.duration_fwhm / math.sqrt(2 * math.log(2))

    @property
    def chi(self) -> float:
        """Coupling per unit amplitude so that chi * peak amplitude = g0."""
        return self.g0 / math.sqrt(self.peak_photons_per_cell)

    def envelope(self, grid: GridSpec, dtype=np.complex128) -> np.ndarray:
        amp = math.sqrt(self.peak_photons_per_cell)
        tilt = np.exp(1j * self.q_p * grid.x)
        if self.profile == "plane":
            return np.broadcast_to((amp * tilt)[:, None, None], grid.shape).astype(dtype)
        ex = np.exp(-((grid.x / self.waist_x) ** 2)) * tilt
        ey = np.exp(-((grid.y / self.waist_y) ** 2))
        et = np.exp(-((grid.t / self.tau) ** 2))
        return (amp * ex[:, None, None] * ey[None, :, None] * et[None, None, :]).astype(dtype)

    def analytic_photon_number(self, grid: GridSpec) -> float:
        """Closed-form window photon number (infinite-window Gaussian integral)."""
        if self.profile == "plane":
            return self.peak_photons_per_cell * grid.n_x * grid.n_y * grid.n_t
        integral = (math.pi / 2) ** 1.5 * self.waist_x * self.waist_y * self.tau
        return self.peak_photons_per_cell * integral / grid.cell

    def check(self, grid: GridSpec) -> list[str]:
        problems = []
        if self.profile == "gaussian":
            for w, L, name in ((self.waist_x, grid.L_x, "x"), (self.waist_y, grid.L_y, "y"),
                               (self.tau, grid.T, "t")):
                if w > L / 4 * 1.0001:
                    problems.append(f"pump width along {name} exceeds a quarter of the window")
        return problems

    def to_dict(self):
        return asdict(self)


def make_rng(seed: int, realization: int = 0) -> np.random.Generator:
    """Counter-based stream for one realization: Philox keyed by (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(realization)])))


@dataclass
class FieldGrid:
    """One stochastic realization of the three envelopes in direct space."""

    grid: GridSpec
    pump: np.ndarray
    signal: np.ndarray
    idler: np.ndarray
    z: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("pump", "signal", "idler"):
            a = getattr(self, name)
            if a.shape != self.grid.shape:
                raise ValueError(f"{name} has shape {a.shape}, expected {self.grid.shape}")

    def check_finite(self) -> bool:
        return all(np.isfinite(getattr(self, n)).all() for n in ("pump", "signal", "idler"))

    def photon_numbers(self) -> dict[str, float]:
        return {n: float(np.sum(np.abs(getattr(self, n)) ** 2, dtype=np.float64))
                for n in ("pump", "signal", "idler")}

    def copy(self) -> "FieldGrid":
        return FieldGrid(self.grid, self.pump.copy(), self.signal.copy(), self.idler.copy(),
                         self.z, dict(self.meta))
