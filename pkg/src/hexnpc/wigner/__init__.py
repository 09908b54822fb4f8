"""Stochastic (Wigner) 3D+1 simulation of the three-wave envelopes."""

from .analysis import (
    EnsembleAccumulator,
    GainExponentFit,
    HotSpot,
    SpectralMap,
    background_intensity,
    conjugate_correlation,
    conjugate_index,
    far_field_spectra,
    hot_spot_gain_exponent,
    hot_spot_intensity,
    local_maxima,
    predicted_hot_spots,
)
from .ensemble import EnsembleResult, model_fingerprint, run_ensemble
from .grid import FieldGrid, GridSpec, PumpPulse, make_rng
from .propagation import (
    SpectralMask,
    SplitStepModel,
    linear_step,
    nonlinear_step,
    propagate,
    seed_vacuum,
    shared_mismatch,
)

__all__ = [
    "EnsembleAccumulator", "EnsembleResult", "FieldGrid", "GainExponentFit", "GridSpec",
    "HotSpot", "PumpPulse", "SpectralMap", "SpectralMask", "SplitStepModel",
    "background_intensity", "conjugate_correlation", "conjugate_index", "far_field_spectra",
    "hot_spot_gain_exponent", "hot_spot_intensity", "linear_step", "local_maxima",
    "make_rng", "model_fingerprint", "nonlinear_step", "predicted_hot_spots", "propagate",
    "run_ensemble", "seed_vacuum", "shared_mismatch",
]
