"""Refractive indices and longitudinal wave-vector components.

All frequencies are angular (rad/s). Wavelengths appear only at the I/O
boundary: Sellmeier formulas take the vacuum wavelength in microns, and
:func:`omega_from_wavelength` / :func:`wavelength_from_omega` convert in
metres.

Supported Sellmeier forms
-------------------------
``bruner``
    Temperature-dependent form used for (stoichiometric) LiTaO3,
    ``n^2 = A + (B + b T^2)/(l^2 - (C + c T^2)^2) + E/(l^2 - F^2) + D l^2``
    with coefficients ``[A, B, C, D, E, F, b, c]`` and ``T`` in kelvin.
``sellmeier``
    Standard ``n^2 = 1 + sum_k B_k l^2 / (l^2 - C_k)`` with coefficients
    ``[B1, C1, B2, C2, ...]`` (``C_k`` in um^2).
``constant``
    Dispersion-free toy model, coefficients ``[n]``. Used as an exact
    oracle throughout the test-suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from scipy.constants import c as C_LIGHT

from .errors import EvanescentModeError, WavelengthRangeError

__all__ = [
    "C_LIGHT",
    "SellmeierModel",
    "WaveTriplet",
    "refractive_index",
    "wavenumber",
    "kz",
    "kz_array",
    "inverse_group_velocity",
    "omega_from_wavelength",
    "wavelength_from_omega",
    "constant_index_model",
    "load_sellmeier",
    "default_sellmeier_path",
]

FORMS = ("bruner", "sellmeier", "constant")


@dataclass(frozen=True)
class SellmeierModel:
    """Empirical dispersion law n(lambda) for one wave.

    The temperature is a fixed parameter of the model; there is no thermal
    tuning.
    """

    coefficients: tuple[float, ...]
    valid_wavelength_range: tuple[float, float]
    temperature: float = 298.15
    form: str = "bruner"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(v) for v in self.coefficients))
        object.__setattr__(
            self, "valid_wavelength_range", tuple(float(v) for v in self.valid_wavelength_range)
        )
        if self.form not in FORMS:
            raise ValueError(f"unknown Sellmeier form {self.form!r}; expected one of {FORMS}")
        lo, hi = self.valid_wavelength_range
        if not 0 < lo < hi:
            raise ValueError(f"invalid wavelength range {self.valid_wavelength_range}")
        ncoef = len(self.coefficients)
        if self.form == "bruner" and ncoef != 8:
            raise ValueError("bruner form needs 8 coefficients [A, B, C, D, E, F, b, c]")
        if self.form == "sellmeier" and (ncoef == 0 or ncoef % 2):
            raise ValueError("sellmeier form needs pairs [B1, C1, B2, C2, ...]")
        if self.form == "constant" and (ncoef != 1 or self.coefficients[0] <= 1):
            raise ValueError("constant form needs a single index n > 1")

    @property
    def is_constant(self) -> bool:
        return self.form == "constant"

    def n_squared(self, wavelength_um):
        """n^2 without range checking; vectorised over ``wavelength_um``."""
        lam2 = np.square(np.asarray(wavelength_um, dtype=float))
        coef = self.coefficients
        if self.form == "constant":
            return np.full_like(lam2, coef[0] ** 2)
        if self.form == "bruner":
            a, b, cc, d, e, f, bt, ct = coef
            t2 = self.temperature**2
            return (
                a
                + (b + bt * t2) / (lam2 - (cc + ct * t2) ** 2)
                + e / (lam2 - f**2)
                + d * lam2
            )
        n2 = np.ones_like(lam2)
        for bk, ck in zip(coef[::2], coef[1::2]):
            n2 = n2 + bk * lam2 / (lam2 - ck)
        return n2

    def index(self, wavelength_um):
        """Refractive index without range checking (vectorised)."""
        return np.sqrt(self.n_squared(wavelength_um))


@dataclass(frozen=True)
class WaveTriplet:
    """Carrier angular frequencies. The idler is defined by energy conservation."""

    omega_p: float
    omega_s: float
    omega_i: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.omega_s < self.omega_p:
            raise ValueError("need 0 < omega_s < omega_p")
        object.__setattr__(self, "omega_i", self.omega_p - self.omega_s)

    @classmethod
    def from_wavelengths(cls, lambda_p: float, lambda_s: float) -> "WaveTriplet":
        """Build from vacuum wavelengths in metres."""
        return cls(omega_from_wavelength(lambda_p), omega_from_wavelength(lambda_s))

    def carrier(self, role: str) -> float:
        return {"pump": self.omega_p, "signal": self.omega_s, "idler": self.omega_i}[role]

    def swapped(self) -> "WaveTriplet":
        """Signal and idler roles exchanged."""
        return WaveTriplet(self.omega_p, self.omega_i)


def omega_from_wavelength(wavelength_m):
    return 2 * np.pi * C_LIGHT / np.asarray(wavelength_m, dtype=float)


def wavelength_from_omega(omega):
    return 2 * np.pi * C_LIGHT / np.asarray(omega, dtype=float)


def _check_range(model: SellmeierModel, wavelength_um):
    lo, hi = model.valid_wavelength_range
    wl = np.asarray(wavelength_um, dtype=float)
    bad = ~((wl >= lo) & (wl <= hi))
    if np.any(bad):
        offending = wl[bad].flat[0] if wl.ndim else float(wl)
        raise WavelengthRangeError(float(offending), (lo, hi))


def refractive_index(model: SellmeierModel, wavelength):
    """Refractive index at vacuum wavelength ``wavelength`` (um).

    Raises
    ------
    WavelengthRangeError
        If any wavelength lies outside ``model.valid_wavelength_range``.
    """
    _check_range(model, wavelength)
    n = model.index(wavelength)
    return float(n) if np.ndim(n) == 0 else n


def wavenumber(model: SellmeierModel, carrier: float, Omega=0.0, check=True):
    """k(Omega) = n(omega) omega / c at omega = carrier + Omega."""
    omega = carrier + np.asarray(Omega, dtype=float)
    wl_um = wavelength_from_omega(omega) * 1e6
    if check:
        _check_range(model, wl_um)
    return model.index(wl_um) * omega / C_LIGHT


def kz(model: SellmeierModel, carrier: float, q, Omega: float = 0.0) -> float:
    """Longitudinal wave-vector component sqrt(k^2(Omega) - |q|^2).

    ``q`` is the transverse wave-vector (2-vector, rad/m) or its modulus.

    Raises
    ------
    EvanescentModeError
        If ``k^2 < |q|^2``; ``deficit`` carries ``|q|^2 - k^2``.
    """
    q2 = float(np.sum(np.square(q)))
    k = float(wavenumber(model, carrier, Omega))
    k2 = k * k
    if k2 < q2:
        raise EvanescentModeError(q2 - k2)
    return math.sqrt(k2 - q2)


def kz_array(model: SellmeierModel, carrier: float, q2, Omega, check=True):
    """Vectorised kz over broadcastable ``q2 = |q|^2`` and ``Omega``.

    Returns ``(kz, propagating)``; evanescent entries are set to zero and
    flagged ``False`` in the mask instead of raising.
    """
    k = wavenumber(model, carrier, Omega, check=check)
    arg = np.square(k) - np.asarray(q2, dtype=float)
    propagating = arg >= 0
    return np.sqrt(np.where(propagating, arg, 0.0)), propagating


def inverse_group_velocity(model: SellmeierModel, carrier: float, rel_step: float = 1e-5) -> float:
    """dk/domega at the carrier by central differences (s/m)."""
    h = rel_step * carrier
    kp = float(wavenumber(model, carrier, h))
    km = float(wavenumber(model, carrier, -h))
    return (kp - km) / (2 * h)


def constant_index_model(n: float, valid_range=(0.1, 20.0), name="constant") -> SellmeierModel:
    return SellmeierModel((n,), valid_range, form="constant", name=name)


def default_sellmeier_path() -> Path:
    return Path(str(resources.files("hexnpc") / "data" / "litao3_e.yaml"))


def load_sellmeier(path=None) -> dict[str, SellmeierModel]:
    """Read a Sellmeier data file and return ``{role: SellmeierModel}``.

    Schema (YAML)::

        schema: sellmeier/1
        form: bruner | sellmeier | constant
        temperature_K: 298.15
        waves:
          pump:   {coefficients: [...], valid_range_um: [lo, hi]}
          signal: {...}
          idler:  {...}

    ``form`` and ``temperature_K`` may be overridden per wave.
    """
    path = default_sellmeier_path() if path is None else Path(path)
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if doc.get("schema") != "sellmeier/1":
        raise ValueError(f"{path}: unsupported schema {doc.get('schema')!r}")
    models = {}
    for role in ("pump", "signal", "idler"):
        if role not in doc.get("waves", {}):
            raise ValueError(f"{path}: missing wave role {role!r}")
        entry = doc["waves"][role]
        models[role] = SellmeierModel(
            coefficients=entry["coefficients"],
            valid_wavelength_range=entry["valid_range_um"],
            temperature=float(entry.get("temperature_K", doc.get("temperature_K", 298.15))),
            form=entry.get("form", doc.get("form", "bruner")),
            name=doc.get("name", path.stem),
        )
    return models
