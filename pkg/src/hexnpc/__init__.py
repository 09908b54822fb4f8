"""Parametric down-conversion in hexagonally poled nonlinear crystals.

Submodules:

``dispersion``     refractive indices and longitudinal wave vectors
``qpm_geometry``   reciprocal lattice, QPM mismatch, phase-matching curves
``coupled_modes``  Gaussian 2-, 3- and 4-mode dynamics
``fock_states``    photon-number states and conditioning
``wigner``         stochastic 3D+1 split-step simulation
``cli_io``         configuration, tasks and exports behind the CLI
"""

from importlib import metadata as _metadata

from .coupled_modes import PHI
from .errors import (
    ConditioningError,
    ConfigError,
    DivergenceError,
    EvanescentModeError,
    HexNPCError,
    LabelMismatchError,
    StateValidityError,
    WavelengthRangeError,
)

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "PHI",
    "HexNPCError",
    "WavelengthRangeError",
    "EvanescentModeError",
    "StateValidityError",
    "ConditioningError",
    "DivergenceError",
    "ConfigError",
    "LabelMismatchError",
    "__version__",
]
