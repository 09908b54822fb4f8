"""Exception types shared across the package."""


class HexNPCError(Exception):
    """Base class for all package errors."""


class WavelengthRangeError(HexNPCError, ValueError):
    """Wavelength outside the validity range of a dispersion model."""

    def __init__(self, wavelength_um, valid_range):
        self.wavelength_um = wavelength_um
        self.valid_range = tuple(valid_range)
        lo, hi = self.valid_range
        super().__init__(
            f"wavelength {wavelength_um!r} um outside valid range [{lo}, {hi}] um"
        )


class EvanescentModeError(HexNPCError, ValueError):
    """Transverse wave-vector exceeds the wave number (k^2 < q^2)."""

    def __init__(self, deficit):
        # deficit = q^2 - k^2 > 0, in (rad/m)^2
        self.deficit = deficit
        super().__init__(f"evanescent mode: q^2 - k^2 = {deficit!r} (rad/m)^2")


class StateValidityError(HexNPCError, ValueError):
    """Covariance matrix violates the uncertainty relation."""


class ConditioningError(HexNPCError, ValueError):
    """Projection onto a measurement outcome of zero probability."""


class DivergenceError(HexNPCError, FloatingPointError):
    """Non-finite field values during propagation."""

    def __init__(self, z, max_amplitude):
        self.z = z
        self.max_amplitude = max_amplitude
        super().__init__(
            f"simulation diverged at z = {z:.6e} m (max |A| = {max_amplitude!r})"
        )


class ConfigError(HexNPCError, ValueError):
    """Invalid or inconsistent configuration. ``errors`` lists every failure."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class LabelMismatchError(HexNPCError, KeyError):
    """Mode labels of two dumps cannot be matched."""

    def __str__(self):
        return str(self.args[0]) if self.args else "label mismatch"
