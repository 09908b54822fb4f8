"""Far-field photon-number maps and hot-spot diagnostics."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage, optimize, stats

from ..dispersion import C_LIGHT
from ..qpm_geometry import Branch, CrystalConfig, mismatch_D_array
from .grid import GridSpec

__all__ = [
    "EnsembleAccumulator",
    "SpectralMap",
    "far_field_spectra",
    "HotSpot",
    "predicted_hot_spots",
    "hot_spot_intensity",
    "background_intensity",
    "local_maxima",
    "conjugate_index",
    "conjugate_correlation",
    "GainExponentFit",
    "hot_spot_gain_exponent",
    "band_photons",
    "shared_line_ratio",
    "ring_cells",
    "ring_background",
    "gain_point",
]

VACUUM = 0.5  # symmetric-ordering photon per mode
MAP_SCHEMA = "spectral_map/1"


class EnsembleAccumulator:
    """Running sums of |A(q, Omega)|^2 over realizations, added in index order."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.signal = np.zeros(grid.shape)
        self.idler = np.zeros(grid.shape)
        self.count = 0

    def add(self, S, I):
        self.signal += np.abs(S) ** 2
        self.idler += np.abs(I) ** 2
        self.count += 1


@dataclass
class SpectralMap:
    """Ensemble-mean photon number per Fourier mode, vacuum baseline removed.

    Arrays are in FFT order, shape ``(n_x, n_y, n_t)``; use :meth:`axes`
    and :meth:`shifted` for sorted axes.
    """

    grid: GridSpec
    signal: np.ndarray
    idler: np.ndarray
    n_realizations: int
    omega_s: float
    omega_i: float
    meta: dict = field(default_factory=dict)

    def data(self, role: str) -> np.ndarray:
        return {"signal": self.signal, "idler": self.idler}[role]

    def carrier(self, role: str) -> float:
        return {"signal": self.omega_s, "idler": self.omega_i}[role]

    def axes(self, role: str = "signal"):
        """Sorted ``q_x``, ``q_y``, ``Omega`` and the vacuum wavelength axis (m)."""
        qx = np.fft.fftshift(self.grid.q_x)
        qy = np.fft.fftshift(self.grid.q_y)
        Om = np.sort(self.grid.Omega)
        lam = 2 * np.pi * C_LIGHT / (self.carrier(role) + Om)
        return qx, qy, Om, lam

    def shifted(self, role: str) -> np.ndarray:
        """Map on sorted axes (x and y fftshifted, Omega ascending)."""
        a = np.fft.fftshift(self.data(role), axes=(0, 1))
        order = np.argsort(self.grid.Omega)
        return a[:, :, order]

    def section(self, role: str, plane: str, at: float = 0.0) -> np.ndarray:
        """2D slice on sorted axes: ``"qx_qy"`` at Omega, ``"qx_Omega"`` at q_y,
        ``"qy_Omega"`` at q_x (nearest grid point)."""
        a = self.shifted(role)
        qx, qy, Om, _ = self.axes(role)
        if plane == "qx_qy":
            return a[:, :, int(np.argmin(np.abs(Om - at)))]
        if plane == "qx_Omega":
            return a[:, int(np.argmin(np.abs(qy - at))), :]
        if plane == "qy_Omega":
            return a[int(np.argmin(np.abs(qx - at))), :, :]
        raise ValueError(f"unknown plane {plane!r}")

    def projection(self, role: str, plane: str) -> np.ndarray:
        a = self.shifted(role)
        axis = {"qx_qy": 2, "qx_Omega": 1, "qy_Omega": 0}[plane]
        return a.sum(axis=axis)

    def save(self, path) -> Path:
        path = Path(path)
        meta = {
            "schema": MAP_SCHEMA,
            "grid": self.grid.to_dict(),
            "n_realizations": self.n_realizations,
            "omega_s": self.omega_s,
            "omega_i": self.omega_i,
            "ordering": "fft",
            "axes": ["q_x_rad_m", "q_y_rad_m", "Omega_rad_s"],
            "units": "photons per mode, vacuum 1/2 subtracted",
            **self.meta,
        }
        np.savez_compressed(path, signal=self.signal.astype(np.float32),
                            idler=self.idler.astype(np.float32),
                            q_x=self.grid.q_x, q_y=self.grid.q_y, Omega=self.grid.Omega,
                            meta=np.array(json.dumps(meta)))
        return path

    @classmethod
    def load(cls, path) -> "SpectralMap":
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            grid = GridSpec(**meta.pop("grid"))
            extra = {k: v for k, v in meta.items()
                     if k not in ("schema", "n_realizations", "omega_s", "omega_i", "ordering",
                                  "axes", "units")}
            return cls(grid, z["signal"].astype(float), z["idler"].astype(float),
                       meta["n_realizations"], meta["omega_s"], meta["omega_i"], extra)

    def write_section_csv(self, path, role: str, plane: str, at: float = 0.0) -> Path:
        """Long-format CSV of a 2D section: axis1, axis2, lambda_nm, photons."""
        qx, qy, Om, lam = self.axes(role)
        sec = self.section(role, plane, at)
        first, second = {"qx_qy": (qx, qy), "qx_Omega": (qx, Om), "qy_Omega": (qy, Om)}[plane]
        names = {"qx_qy": ("q_x_rad_m", "q_y_rad_m"), "qx_Omega": ("q_x_rad_m", "Omega_rad_s"),
                 "qy_Omega": ("q_y_rad_m", "Omega_rad_s")}[plane]
        A, B = np.meshgrid(first, second, indexing="ij")
        if plane == "qx_qy":
            lam_col = np.full(A.shape, 2 * np.pi * C_LIGHT / (self.carrier(role) + at))
        else:
            lam_col = 2 * np.pi * C_LIGHT / (self.carrier(role) + B)
        rows = np.column_stack([A.ravel(), B.ravel(), lam_col.ravel() * 1e9, sec.ravel()])
        header = ",".join([*names, "lambda_nm", "photons_per_mode"])
        path = Path(path)
        np.savetxt(path, rows, delimiter=",", header=f"# schema: map_section/1\n{header}",
                   comments="", fmt="%.9g")
        return path


def far_field_spectra(acc: EnsembleAccumulator, crystal: CrystalConfig, meta=None) -> SpectralMap:
    """Ensemble-mean spectra with the 1/2-photon vacuum term subtracted."""
    if acc.count < 1:
        raise ValueError("at least one realization is required")
    return SpectralMap(
        acc.grid,
        acc.signal / acc.count - VACUUM,
        acc.idler / acc.count - VACUUM,
        acc.count,
        crystal.carrier("signal"),
        crystal.carrier("idler"),
        dict(meta or {}),
    )


@dataclass(frozen=True)
class HotSpot:
    role: str
    kind: str  # "shared" or "coupled"
    q_x: float
    q_y: float
    Omega: float


def _shared_root(crystal: CrystalConfig, q_p: float, role: str, window) -> float | None:
    """Omega of the on-axis (q_y = 0) shared mode of ``role``, or None."""

    def D(Om):
        val, _ = mismatch_D_array(crystal, q_p, q_p, 0.0, Om, "G01", role=role)
        return float(val)

    Om = np.linspace(window[0], window[1], 801)
    vals = np.array([D(o) for o in Om])
    sign = np.sign(vals)
    idx = np.nonzero(np.isfinite(vals[:-1]) & (sign[:-1] * sign[1:] < 0))[0]
    if len(idx) == 0:
        return None
    roots = [optimize.brentq(D, Om[k], Om[k + 1], xtol=1e-6 * abs(Om[1] - Om[0])) for k in idx]
    return min(roots, key=abs)


def predicted_hot_spots(crystal: CrystalConfig, grid: GridSpec, q_p: float) -> list[HotSpot]:
    """Hot-spot locations in the ``q_y = 0`` plane for both far fields.

    Shared signal at ``(q_p, Omega_0)`` with idlers at ``(-+G_x, -Omega_0)``;
    shared idler at ``(q_p, Omega_1)`` with signals at ``(-+G_x, -Omega_1)``.
    """
    G_x = crystal.lattice.G_x
    Om_max = float(np.max(np.abs(grid.Omega)))
    spots = []
    for role, other in (("signal", "idler"), ("idler", "signal")):
        Om = _shared_root(crystal, q_p, role, (-Om_max, Om_max))
        if Om is None:
            continue
        spots.append(HotSpot(role, "shared", q_p, 0.0, Om))
        for sgn in (-1, 1):
            spots.append(HotSpot(other, "coupled", sgn * G_x, 0.0, -Om))
    return spots


def _nearest(axis, value):
    return int(np.argmin(np.abs(axis - value)))


def hot_spot_intensity(smap: SpectralMap, role: str, q_x: float, Omega: float,
                       half_width: tuple[int, int] = (1, 6), smooth: int = 3) -> float:
    """Peak of the locally smoothed ``q_y = 0`` section near ``(q_x, Omega)``.

    The map is smoothed along Omega (``smooth`` points) and over ``q_y = 0,
    +-dq_y`` before taking the maximum inside ``+-half_width`` grid points.
    """
    qx, qy, Om, _ = smap.axes(role)
    a = smap.shifted(role)
    iy = _nearest(qy, 0.0)
    sec = a[:, max(iy - 1, 0): iy + 2, :].mean(axis=1)
    sec = ndimage.uniform_filter1d(sec, smooth, axis=1, mode="wrap")
    ix, it = _nearest(qx, q_x), _nearest(Om, Omega)
    wx, wt = half_width
    win = sec[max(ix - wx, 0): ix + wx + 1, max(it - wt, 0): it + wt + 1]
    return float(win.max())


def background_intensity(smap: SpectralMap, role: str, q_x_values, smooth: int = 3) -> float:
    """Mean over ``q_x_values`` of the peak (along Omega) of the ``q_y = 0`` section.

    Columns should lie on single-process phase-matching curves away from
    any hot spot.
    """
    qx, qy, Om, _ = smap.axes(role)
    a = smap.shifted(role)
    iy = _nearest(qy, 0.0)
    sec = a[:, max(iy - 1, 0): iy + 2, :].mean(axis=1)
    sec = ndimage.uniform_filter1d(sec, smooth, axis=1, mode="wrap")
    return float(np.mean([sec[_nearest(qx, q)].max() for q in q_x_values]))


def local_maxima(section: np.ndarray, n: int, size=(5, 9), smooth=(1, 3)) -> list[tuple[int, int, float]]:
    """The ``n`` brightest local maxima of a smoothed 2D section, as (i, j, value)."""
    sm = ndimage.uniform_filter(section, smooth, mode="wrap")
    peaks = (sm == ndimage.maximum_filter(sm, size=size, mode="wrap"))
    idx = np.argwhere(peaks)
    vals = sm[peaks]
    order = np.argsort(vals)[::-1][:n]
    return [(int(idx[k][0]), int(idx[k][1]), float(vals[k])) for k in order]


def conjugate_index(grid: GridSpec, ix: int, it: int, q_p: float, G_x: float, sign: int):
    """FFT indices of the idler partner of signal ``(ix, q_y=0, it)`` via ``q_p - q -+ G_x``."""
    q = grid.q_x[ix]
    qi = q_p - q + sign * G_x
    return grid.qx_index(qi), (-it) % grid.n_t


def conjugate_correlation(signal_samples, idler_samples, sig_idx, idl_idx) -> float:
    """Pearson correlation across realizations of |A|^2 at two points.

    ``*_samples`` are per-realization ``q_y = 0`` intensity slices, shape
    ``(R, n_x, n_t)`` in FFT order.
    """
    a = np.asarray(signal_samples)[:, sig_idx[0], sig_idx[1]]
    b = np.asarray(idler_samples)[:, idl_idx[0], idl_idx[1]]
    return float(np.corrcoef(a, b)[0, 1])


@dataclass(frozen=True)
class GainExponentFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    r_squared: float
    n_points: int
    warning: str | None = None


def hot_spot_gain_exponent(background, hotspot, confidence: float = 0.95,
                           min_decades: float = 0.5) -> GainExponentFit:
    """Slope of ``log I_hotspot`` against ``log I_background``.

    Warns (and records the warning) when the background spans less than
    ``min_decades`` decades.
    """
    bg = np.asarray(background, dtype=float)
    hs = np.asarray(hotspot, dtype=float)
    if bg.size < 3:
        raise ValueError("at least three gain values are required")
    if not (np.all(bg > 0) and np.all(hs > 0) and np.all(np.isfinite(bg)) and np.all(np.isfinite(hs))):
        raise ValueError("intensities must be positive")
    x, y = np.log(bg), np.log(hs)
    fit = stats.linregress(x, y)
    tq = stats.t.ppf(0.5 + confidence / 2, x.size - 2)
    msg = None
    if (x.max() - x.min()) / math.log(10) < min_decades:
        msg = (f"background spans only {(x.max() - x.min()) / math.log(10):.2f} decades; "
               "the exponent is poorly constrained")
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return GainExponentFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        stderr=float(fit.stderr),
        ci_low=float(fit.slope - tq * fit.stderr),
        ci_high=float(fit.slope + tq * fit.stderr),
        r_squared=float(fit.rvalue**2),
        n_points=int(x.size),
        warning=msg,
    )


def band_photons(smap: SpectralMap, role: str, q_x: float, half_width: int = 2) -> float:
    """Photons in all modes with ``|q_x' - q_x| <= half_width`` grid steps (any q_y, Omega)."""
    sel = np.abs(smap.grid.q_x - q_x) <= (half_width + 0.5) * smap.grid.dq_x
    return float(smap.data(role)[sel].sum())


def shared_line_ratio(smap: SpectralMap, role: str, q_p: float, half_width: int = 2,
                      method: str = "peak") -> float:
    """Shared-line over unshared-line photon number at superresonance.

    With ``q_p = -+G_x`` the shared (b) modes sit at ``q_x = q_p`` and their
    unshared partners (c) at ``q_x = -q_p``.  ``"peak"`` compares the
    brightest smoothed point of each line, a per-mode quantity.  ``"band"``
    integrates ``+-half_width`` columns, which also folds in the line widths.
    """
    if method == "band":
        return band_photons(smap, role, q_p, half_width) / band_photons(smap, role, -q_p, half_width)
    if method != "peak":
        raise ValueError(f"unknown method {method!r}")
    whole = (1, smap.grid.n_t)
    return (hot_spot_intensity(smap, role, q_p, 0.0, half_width=whole)
            / hot_spot_intensity(smap, role, -q_p, 0.0, half_width=whole))


def ring_cells(crystal: CrystalConfig, grid: GridSpec, q_p: float, role: str,
               max_Dl: float = 1.0, min_other_Dl: float = 20.0,
               exclude: float = 0.15) -> np.ndarray:
    """``q_y = 0`` cells (FFT order, ``(n_x, n_t)``) on a single-process ring.

    A cell qualifies when one branch is phase matched (``|D l_c| < max_Dl``)
    while the other is far off (``|D l_c| > min_other_Dl``), and its ``q_x``
    is at least ``exclude * G_x`` away from ``q_p`` and from ``+-G_x``.
    """
    G_x = crystal.lattice.G_x
    qx = grid.q_x[:, None]
    Om = grid.Omega[None, :]
    l = crystal.length
    D1, ok1 = mismatch_D_array(crystal, q_p, qx, 0.0, Om, Branch.G01, role)
    D2, ok2 = mismatch_D_array(crystal, q_p, qx, 0.0, Om, Branch.G10, role)
    a1, a2 = np.abs(np.nan_to_num(D1, nan=np.inf)) * l, np.abs(np.nan_to_num(D2, nan=np.inf)) * l
    on = ((a1 < max_Dl) & (a2 > min_other_Dl)) | ((a2 < max_Dl) & (a1 > min_other_Dl))
    far = np.ones_like(qx, dtype=bool)
    for c in (q_p, -G_x, G_x):
        far &= np.abs(qx - c) > exclude * G_x
    return on & far & ok1 & ok2


def ring_background(smap: SpectralMap, crystal: CrystalConfig, q_p: float, role: str,
                    **kw) -> float:
    """Mean photon number over :func:`ring_cells` (``q_y = 0``)."""
    cells = ring_cells(crystal, smap.grid, q_p, role, **kw)
    if not cells.any():
        raise ValueError("no single-process ring cells in the window")
    return float(smap.data(role)[:, 0, :][cells].mean())


def gain_point(smap: SpectralMap, crystal: CrystalConfig, q_p: float) -> tuple[float, float]:
    """``(I_background, I_hotspot)`` for one gain value.

    The background is the ring average of both far fields; the hot spot is
    the mean of the shared-signal and shared-idler peak intensities.
    """
    bg = np.mean([ring_background(smap, crystal, q_p, r) for r in ("signal", "idler")])
    shared = [h for h in predicted_hot_spots(crystal, smap.grid, q_p) if h.kind == "shared"]
    if not shared:
        raise ValueError("no shared hot spot inside the frequency window")
    hs = np.mean([hot_spot_intensity(smap, h.role, h.q_x, h.Omega) for h in shared])
    return float(bg), float(hs)
