"""Split-step pseudo-spectral integration of the three-wave envelopes.

Envelope convention
-------------------
Each field ``A_j`` multiplies ``exp(i k_j0 z - i omega_j t)`` with ``k_j0``
the on-axis carrier wave number, and time is measured in the frame moving
with the pump group velocity ``1/k'_p``. Linear propagation of the Fourier
component ``(q, Omega)`` over ``dz`` is therefore the phase

    exp(i [k_jz(q, Omega) - k_j0 - k'_p Omega] dz).

The frame term cancels between the three waves in every coupling. The
residual carrier mismatch ``dk0 = k_p0 - k_s0 - k_i0 - G_z`` is absorbed
into the signal and idler references (each carries an extra
``exp(i dk0 z / 2)``), so the local coupling is z-independent:

    dA_s/dz = kappa A_p A_i^*,   dA_i/dz = kappa A_p A_s^*,
    dA_p/dz = -kappa A_s A_i,    kappa = 2 chi cos(G_x x).

With this choice the linear phases of a coupled pair sum to the
parametric-limit mismatch ``D``, so the splitting error of each pair scales
with ``D`` rather than with the much larger individual phase rates. For a
plane-wave pump the scheme reproduces ``da_s/dz = g0 exp(-i D z) a_i^dag``
for every coupled pair. Photon numbers do not depend on the reference phase.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..dispersion import inverse_group_velocity
from ..errors import DivergenceError
from ..qpm_geometry import CrystalConfig, mismatch_D_array
from .fft import make_backend
from .grid import FieldGrid, GridSpec, PumpPulse, make_rng
from .kernels import midpoint_depleted, midpoint_undepleted

log = logging.getLogger(__name__)

__all__ = [
    "SpectralMask",
    "SplitStepModel",
    "shared_mismatch",
    "seed_vacuum",
    "linear_step",
    "nonlinear_step",
    "propagate",
]

ROLES = ("pump", "signal", "idler")


@dataclass
class SpectralMask:
    """Boolean spectral support for signal and idler (truncated-mode runs)."""

    signal: np.ndarray
    idler: np.ndarray

    @classmethod
    def systems(cls, grid: GridSpec, signal_qx, idler_qx, cells=None):
        """Keep ``q_x`` columns restricted to a set of ``(q_y, Omega)`` cells.

        ``cells`` is a boolean ``(n_y, n_t)`` array selecting signal cells
        (default: all); idler cells are the conjugates ``(-q_y, -Omega)``.
        Nyquist rows are always dropped since they have no conjugate partner.
        """
        cells = np.ones((grid.n_y, grid.n_t), bool) if cells is None else np.array(cells, bool)
        if grid.n_y > 1:
            cells[grid.n_y // 2, :] = False
        if grid.n_t > 1:
            cells[:, grid.n_t // 2] = False
        conj = np.roll(cells[::-1, ::-1], (1, 1), axis=(0, 1))  # index k -> -k mod n

        def build(qxs, c):
            m = np.zeros(grid.shape, dtype=bool)
            for q in qxs:
                m[grid.qx_index(q)] = c
            return m

        return cls(build(signal_qx, cells), build(idler_qx, conj))

    @classmethod
    def shared_signal(cls, grid: GridSpec, q_p: float, G_x: float, cells=None):
        """Shared signal at ``q_x = q_p`` and its two idler partners at ``-+G_x``."""
        return cls.systems(grid, [q_p], [-G_x, G_x], cells)

    @classmethod
    def resonant(cls, grid: GridSpec, G_x: float, cells=None):
        """Four-mode system at ``q_p = -+G_x``: both waves on the ``+-G_x`` columns."""
        return cls.systems(grid, [-G_x, G_x], [-G_x, G_x], cells)

    @staticmethod
    def phase_matched_cells(crystal: CrystalConfig, grid: GridSpec, q_p: float, max_Dl: float):
        """Signal cells at ``q_x = q_p`` with ``|D l_c| <= max_Dl`` (shared mismatch).

        Nyquist rows are excluded, matching :meth:`systems`.
        """
        D = shared_mismatch(crystal, grid, q_p)
        cells = np.abs(D) * crystal.length <= max_Dl
        if grid.n_y > 1:
            cells[grid.n_y // 2, :] = False
        if grid.n_t > 1:
            cells[:, grid.n_t // 2] = False
        return cells

    def apply(self, S, I):
        """Zero signal/idler spectra outside the support, in place."""
        S[~self.signal] = 0
        I[~self.idler] = 0

    def apply_direct(self, s, i, fft):
        """Project direct-space fields onto the support."""
        S, I = fft.empty(), fft.empty()
        S[...] = s
        I[...] = i
        fft.forward(S)
        fft.forward(I)
        self.apply(S, I)
        return fft.backward(S), fft.backward(I)


def shared_mismatch(crystal: CrystalConfig, grid: GridSpec, q_p: float) -> np.ndarray:
    """Mismatch ``D`` of the shared signal ``(q_p, q_y, Omega)`` on the ``(n_y, n_t)`` grid."""
    qy = grid.q_y[:, None]
    Om = grid.Omega[None, :]
    D, _ = mismatch_D_array(crystal, q_p, q_p, qy, Om, "G01")
    return D


class SplitStepModel:
    """Pre-computed operators for one crystal, grid and pump.

    Parameters
    ----------
    steps:
        Number of longitudinal steps; ``dz = l_c / steps``.
    depletion:
        Evolve the pump with the back-conversion term. When off, the pump
        only diffracts/disperses and is advanced exactly in Fourier space.
    mask:
        Optional :class:`SpectralMask`; signal/idler content outside it is
        removed at seeding and after every step.
    dtype:
        ``complex64`` (desk runs) or ``complex128`` (precision tests).
    """

    def __init__(
        self,
        crystal: CrystalConfig,
        grid: GridSpec,
        pulse: PumpPulse,
        steps: int = 400,
        depletion: bool = False,
        mask: SpectralMask | None = None,
        dtype=np.complex64,
        threads: int = 1,
        fft_backend: str = "auto",
        use_numba: bool = True,
    ):
        if steps < 1:
            raise ValueError("steps must be >= 1")
        self.crystal = crystal
        self.grid = grid
        self.pulse = pulse
        self.steps = int(steps)
        self.l_c = pulse.l_c
        self.dz = self.l_c / self.steps
        self.depletion = depletion
        self.mask = mask
        self.dtype = np.dtype(dtype)
        self.use_numba = use_numba
        self.fft = make_backend(grid.shape, self.dtype, threads, fft_backend)

        G = crystal.lattice
        self.k1p = inverse_group_velocity(crystal.dispersion["pump"], crystal.carrier("pump"))
        self.dk0 = crystal.k0("pump") - crystal.k0("signal") - crystal.k0("idler") - G.G_z
        self.coef = (2 * pulse.chi * np.cos(G.G_x * grid.x)).astype(self.dtype.type(0).real.dtype)

        q2 = grid.q2()
        Om = grid.Omega[None, None, :]
        self.rates = {}
        self.evanescent = {}
        for role in ROLES:
            kz, ok = crystal.kz(role, q2, Om)
            shift = self.dk0 / 2 if role != "pump" else 0.0
            self.rates[role] = np.where(ok, kz - crystal.k0(role) - shift - self.k1p * Om, 0.0)
            self.evanescent[role] = ~ok
        self._phase_cache = {}

    # ---------------------------------------------------------------- helpers
    def phase(self, role: str, dz: float) -> np.ndarray:
        """exp(i rate dz) with evanescent entries zeroed (cached per dz)."""
        key = (role, float(dz))
        if key not in self._phase_cache:
            ph = np.exp(1j * self.rates[role] * dz)
            ph[self.evanescent[role]] = 0.0
            self._phase_cache[key] = ph.astype(self.dtype)
        return self._phase_cache[key]

    def _apply_mask(self, S, I):
        if self.mask is not None:
            self.mask.apply(S, I)

    def to_spectral(self, a):
        buf = self.fft.empty()
        buf[...] = a
        return self.fft.forward(buf)

    def to_direct(self, a):
        buf = self.fft.empty()
        buf[...] = a
        return self.fft.backward(buf)

    def _kernel(self, S, I, P, h):
        if self.mask is not None:
            return self._masked_midpoint(S, I, P, h)
        if self.depletion:
            return midpoint_depleted(S, I, P, self.coef, h / 2, h, self.use_numba)
        return midpoint_undepleted(S, I, P, self.coef, h / 2, h, self.use_numba)

    def _project(self, s, i):
        """Restrict direct-space signal/idler to the spectral support."""
        return self.mask.apply_direct(s, i, self.fft)

    def _masked_midpoint(self, S, I, P, h):
        # the intermediate stage is projected too, otherwise discarded modes
        # feed back at O(h^2) per step and the scheme drops to first order
        c = self.coef[:, None, None]
        K = P * c
        sm, im = self._project(S + (h / 2) * K * np.conj(I), I + (h / 2) * K * np.conj(S))
        if self.depletion:
            pm = P - (h / 2) * c * S * I
            K = pm * c
            P -= h * c * sm * im
        S += h * K * np.conj(im)
        I += h * K * np.conj(sm)
        S[...], I[...] = self._project(S, I)
        peak = max(np.max(np.abs(S) ** 2), np.max(np.abs(I) ** 2))
        return float(peak)

    # ---------------------------------------------------------- single steps
    def linear_step(self, fields: FieldGrid, dz: float) -> FieldGrid:
        """Exact linear propagation of all three fields over ``dz`` (either sign)."""
        out = {}
        for role in ROLES:
            spec = self.to_spectral(getattr(fields, role))
            spec *= self.phase(role, dz)
            out[role] = self.to_direct(spec)
        if self.mask is not None:
            S = self.to_spectral(out["signal"])
            I = self.to_spectral(out["idler"])
            self._apply_mask(S, I)
            out["signal"], out["idler"] = self.to_direct(S), self.to_direct(I)
        return FieldGrid(self.grid, out["pump"], out["signal"], out["idler"], fields.z + dz,
                         dict(fields.meta))

    def nonlinear_step(self, fields: FieldGrid, z: float, dz: float) -> FieldGrid:
        """Explicit-midpoint step of the local coupling from ``z`` to ``z + dz``."""
        f = fields.copy()
        S = f.signal.astype(self.dtype, copy=False)
        I = f.idler.astype(self.dtype, copy=False)
        P = f.pump.astype(self.dtype, copy=False)
        peak = self._kernel(S, I, P, dz)
        if not np.isfinite(peak):
            raise DivergenceError(z + dz, peak)
        f.signal, f.idler = S, I
        if self.depletion:
            f.pump = P
        f.z = z + dz
        return f

    # ------------------------------------------------------------ full run
    def seed(self, seed: int, realization: int = 0) -> FieldGrid:
        return seed_vacuum(self.grid, self.pulse, make_rng(seed, realization),
                           dtype=self.dtype, mask=self.mask, model=self)

    def run_spectral(self, fields: FieldGrid, progress: Callable | None = None):
        """Propagate through the crystal; returns final ``(S, I, P)`` spectra.

        Strang splitting ``L/2 N L/2`` with adjacent half-steps merged.
        """
        h = self.dz
        S = self.to_spectral(fields.signal)
        I = self.to_spectral(fields.idler)
        P = self.to_spectral(fields.pump)
        self._apply_mask(S, I)
        half = {r: self.phase(r, h / 2) for r in ROLES}
        full = {r: self.phase(r, h) for r in ROLES}
        Pd = self.fft.empty()
        z = fields.z
        for n in range(self.steps):
            lin = half if n == 0 else full
            S *= lin["signal"]
            I *= lin["idler"]
            P *= lin["pump"]
            self.fft.backward(S)
            self.fft.backward(I)
            if self.depletion:
                self.fft.backward(P)
                peak = self._kernel(S, I, P, h)
                self.fft.forward(P)
            else:
                Pd[...] = P
                self.fft.backward(Pd)
                peak = self._kernel(S, I, Pd, h)
            if not np.isfinite(peak):
                raise DivergenceError(z + h, float(np.sqrt(peak)) if peak == peak else peak)
            self.fft.forward(S)
            self.fft.forward(I)
            self._apply_mask(S, I)
            z += h
            if progress is not None:
                progress(n + 1, self.steps, z)
        S *= half["signal"]
        I *= half["idler"]
        P *= half["pump"]
        return S, I, P, z

    def propagate(self, fields: FieldGrid, progress: Callable | None = None) -> FieldGrid:
        S, I, P, z = self.run_spectral(fields, progress)
        return FieldGrid(
            self.grid,
            self.fft.backward(P),
            self.fft.backward(S),
            self.fft.backward(I),
            z,
            dict(fields.meta),
        )


def seed_vacuum(
    grid: GridSpec,
    pulse: PumpPulse,
    rng,
    dtype=np.complex64,
    mask: SpectralMask | None = None,
    model: SplitStepModel | None = None,
) -> FieldGrid:
    """Vacuum-seeded signal/idler plus the deterministic coherent pump.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed. Signal and
    idler receive complex circular Gaussian noise with ``E|A|^2 = 1/2`` per
    cell; with a mask the noise is restricted to the kept spectral modes.
    """
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(rng)
    dtype = np.dtype(dtype)
    rdt = dtype.type(0).real.dtype

    def noise():
        a = np.empty(grid.shape, dtype)
        a.real = rng.standard_normal(grid.shape, dtype=rdt)
        a.imag = rng.standard_normal(grid.shape, dtype=rdt)
        a *= rdt.type(0.5)
        return a

    s, i = noise(), noise()
    if mask is not None:
        fft = model.fft if model is not None else make_backend(grid.shape, dtype, 1, "scipy")
        s, i = mask.apply_direct(s, i, fft)
    pump = pulse.envelope(grid, dtype)
    return FieldGrid(grid, pump, s, i, 0.0)


def linear_step(fields: FieldGrid, model: SplitStepModel, dz: float) -> FieldGrid:
    return model.linear_step(fields, dz)


def nonlinear_step(fields: FieldGrid, model: SplitStepModel, z: float, dz: float) -> FieldGrid:
    return model.nonlinear_step(fields, z, dz)


def propagate(fields: FieldGrid, model: SplitStepModel, progress=None) -> FieldGrid:
    return model.propagate(fields, progress)
