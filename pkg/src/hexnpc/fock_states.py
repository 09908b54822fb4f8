"""Photon-number (Fock) representation of the few-mode states.

States are dense amplitude tensors with one axis per mode and photon
numbers ``0..N_max`` along each axis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .coupled_modes import BogoliubovCoefficients
from .errors import ConditioningError

__all__ = [
    "TruncatedFockState",
    "tmsv_amplitudes",
    "split_idler_state",
    "condition_on_signal",
    "spontaneous_four_mode_state",
    "split_distribution_exact",
    "binomial_exact",
]


@dataclass
class TruncatedFockState:
    mode_labels: tuple[str, ...]
    amplitudes: np.ndarray
    truncation_tol: float = 1e-10
    perturbative_order: int | None = None  # set for unnormalised series states

    def __post_init__(self):
        self.mode_labels = tuple(self.mode_labels)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != len(self.mode_labels):
            raise ValueError("one amplitude axis per mode label is required")
        if len(set(self.amplitudes.shape)) > 1:
            raise ValueError("all modes must share the same cutoff")

    @property
    def n_max(self) -> int:
        return self.amplitudes.shape[0] - 1

    def axis(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise KeyError(f"no mode labelled {label!r} in {self.mode_labels}") from None

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def norm_deficit(self) -> float:
        return 1.0 - self.norm()

    def probabilities(self) -> np.ndarray:
        """Joint photon-number distribution, renormalised to unit sum."""
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def marginal(self, label: str) -> np.ndarray:
        p = self.probabilities()
        ax = self.axis(label)
        return p.sum(axis=tuple(a for a in range(p.ndim) if a != ax))

    def number_moments(self, renormalize: bool = True):
        """Means and covariance matrix of the photon numbers.

        With ``renormalize=False`` the moments are taken against the raw
        (possibly deficient) probabilities, i.e. the truncated tail counts as
        zero photons rather than being redistributed.
        """
        p = np.abs(self.amplitudes) ** 2
        if renormalize:
            p = p / p.sum()
        n = np.arange(self.n_max + 1, dtype=float)
        nd = len(self.mode_labels)
        grids = [n.reshape([-1 if a == j else 1 for a in range(nd)]) for j in range(nd)]
        means = np.array([np.sum(p * g) for g in grids])
        cov = np.empty((nd, nd))
        for j in range(nd):
            for k in range(j, nd):
                cov[j, k] = cov[k, j] = np.sum(p * grids[j] * grids[k]) - means[j] * means[k]
        return means, cov

    def mean_number(self, label: str) -> float:
        means, _ = self.number_moments()
        return float(means[self.axis(label)])

    def reduced_density_matrix(self, keep: Sequence[str]) -> np.ndarray:
        """Density matrix of the ``keep`` modes, flattened row-major."""
        keep_ax = [self.axis(lab) for lab in keep]
        rest = [a for a in range(self.amplitudes.ndim) if a not in keep_ax]
        psi = np.transpose(self.amplitudes, keep_ax + rest)
        d = (self.n_max + 1) ** len(keep_ax)
        psi = psi.reshape(d, -1)
        rho = psi @ psi.conj().T
        return rho / np.trace(rho).real

    def to_dict(self) -> dict:
        nz = np.argwhere(np.abs(self.amplitudes) > 0)
        return {
            "mode_labels": list(self.mode_labels),
            "n_max": self.n_max,
            "norm": self.norm(),
            "amplitudes": [
                {"n": idx.tolist(), "re": float(self.amplitudes[tuple(idx)].real),
                 "im": float(self.amplitudes[tuple(idx)].imag)}
                for idx in nz
            ],
        }


def tmsv_amplitudes(coeff: BogoliubovCoefficients, N_max: int) -> np.ndarray:
    """Schmidt amplitudes ``c_N = (U V)^N / |U|^(2N+1)`` for N = 0..N_max."""
    if N_max < 0:
        raise ValueError("N_max must be >= 0")
    U, V = coeff.U, coeff.V
    ratio = U * V / abs(U) ** 2  # modulus tanh(r)
    N = np.arange(N_max + 1)
    return ratio**N / abs(U)


def _log_binomial(N, k):
    return gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)


def split_idler_state(c, N_max: int | None = None, labels=("s", "i1", "i2")) -> TruncatedFockState:
    """Pair state ``sum_N c_N |N>_s |N>_{i+}`` with ``i+`` split 50:50.

    ``|N>_{i+}`` expands to ``sum_k 2^(-N/2) sqrt(C(N, k)) |k>_1 |N-k>_2``.
    """
    c = np.asarray(c, dtype=complex)
    N_max = len(c) - 1 if N_max is None else N_max
    c = c[: N_max + 1]
    amp = np.zeros((N_max + 1,) * 3, dtype=complex)
    for N in range(len(c)):
        k = np.arange(N + 1)
        w = np.exp(0.5 * _log_binomial(N, k) - 0.5 * N * math.log(2))
        amp[N, k, N - k] = c[N] * w
    return TruncatedFockState(labels, amp)


def condition_on_signal(state: TruncatedFockState, N: int, signal: str = "s",
                        min_probability: float = 1e-300) -> TruncatedFockState:
    """Project the signal mode on ``|N>`` and renormalise.

    The global phase is removed so that the first non-zero amplitude is real
    and positive.

    Raises
    ------
    ConditioningError
        If ``N`` exceeds the cutoff or the outcome has zero probability.
    """
    if not 0 <= N <= state.n_max:
        raise ConditioningError(f"N = {N} outside 0..{state.n_max}")
    ax = state.axis(signal)
    proj = np.take(state.amplitudes, N, axis=ax)
    prob = float(np.sum(np.abs(proj) ** 2))
    if prob <= min_probability:
        raise ConditioningError(f"signal outcome N = {N} has zero probability")
    proj = proj / math.sqrt(prob)
    first = proj.flat[np.flatnonzero(np.abs(proj) > 0)[0]]
    proj = proj * (abs(first) / first)
    labels = tuple(lab for lab in state.mode_labels if lab != signal)
    return TruncatedFockState(labels, proj, state.truncation_tol)


def spontaneous_four_mode_state(g0l: float, D: float, l_c: float,
                                warn_above: float = 0.05) -> TruncatedFockState:
    """First-order pair state of the resonant 4-mode system, unnormalised.

    ``|0> + A [b_s^dag c_i^dag + b_s^dag b_i^dag + c_s^dag b_i^dag] |0>`` with
    ``A = g0 l_c sinc(D l_c/2) exp(-i D l_c/2)``; modes ``(b_s, c_s, b_i, c_i)``,
    cutoff one photon per mode.
    """
    if g0l >= warn_above:
        warnings.warn(
            f"g0*l_c = {g0l} is not small; the first-order state is inaccurate",
            RuntimeWarning,
            stacklevel=2,
        )
    x = D * l_c / 2
    A = g0l * np.sinc(x / np.pi) * np.exp(-1j * x)
    amp = np.zeros((2, 2, 2, 2), dtype=complex)
    amp[0, 0, 0, 0] = 1.0
    amp[1, 0, 0, 1] = A  # b_s c_i
    amp[1, 0, 1, 0] = A  # b_s b_i
    amp[0, 1, 1, 0] = A  # c_s b_i
    return TruncatedFockState(("b_s", "c_s", "b_i", "c_i"), amp, perturbative_order=1)


def split_distribution_exact(N: int) -> list[Fraction]:
    """P(k, N-k) after a 50:50 splitter, by exact polynomial expansion.

    Expands ``((a1^dag + a2^dag)/sqrt 2)^N |0>`` with integer coefficients;
    the probability of ``|k, N-k>`` is ``coef^2 k! (N-k)! / (N! 2^N)``.
    """
    coeffs = [1]  # coefficients of a1^k a2^(n-k), k = 0..n
    for _ in range(N):
        coeffs = [(coeffs[k] if k < len(coeffs) else 0) + (coeffs[k - 1] if k else 0)
                  for k in range(len(coeffs) + 1)]
    denom = math.factorial(N) * 2**N
    return [
        Fraction(coeffs[k] ** 2 * math.factorial(k) * math.factorial(N - k), denom)
        for k in range(N + 1)
    ]


def binomial_exact(N: int) -> list[Fraction]:
    return [Fraction(math.comb(N, k), 2**N) for k in range(N + 1)]
