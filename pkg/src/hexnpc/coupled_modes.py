"""Analytic Gaussian dynamics of the 2-, 3- and 4-mode parametric systems.

Covariance matrices use interleaved quadratures ``(x1, p1, x2, p2, ...)``
with ``x = (a + a^dag)/sqrt(2)``, ``p = (a - a^dag)/(i sqrt(2))`` and
symmetric (Wigner) ordering, so the vacuum is ``I/2``. Photon numbers are
per discrete mode (the plane-wave ``delta(0)`` factor is set to one).

Linear mode equations are written as ``da/dz = K(z) a^dag`` with
``K(z) = g0 exp(-i D z) C`` and a real symmetric coupling pattern ``C``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import StateValidityError
from .qpm_geometry import PumpConfig

__all__ = [
    "PHI",
    "BogoliubovCoefficients",
    "GaussianModeState",
    "GoldenRatioSplit",
    "CorrelationReport",
    "FibonacciTrajectory",
    "bogoliubov",
    "symplectic_form",
    "symplectic_from_bogoliubov",
    "two_mode_squeezer",
    "passive_transform",
    "coupling_pattern",
    "golden_decoupling",
    "solve_two_mode",
    "solve_three_mode",
    "solve_four_mode_resonant",
    "integrate_ode_oracle",
    "quadrature_fibonacci",
    "fibonacci_integers",
    "correlations",
    "dump_state",
    "load_state_dump",
    "THREE_MODE_LABELS",
    "FOUR_MODE_LABELS",
]

PHI = (1 + math.sqrt(5)) / 2
THREE_MODE_LABELS = ("s0", "i1", "i2")
FOUR_MODE_LABELS = ("b_s", "c_s", "b_i", "c_i")

_SERIES_LIMIT = 1e-8  # |Gamma l|^2 below which the series branch is used


@dataclass(frozen=True)
class BogoliubovCoefficients:
    """Input-output coefficients of one conjugate pair.

    ``a_s(l) = U a_s(0) + V a_i^dag(0)`` and the same with ``s <-> i``.
    ``Gamma`` is complex: imaginary below threshold (``|gamma g0| < |D|/2``).
    """

    U: complex
    V: complex
    Gamma: complex
    gamma_factor: float
    D: float
    squeeze_r: float
    squeeze_theta: float

    @property
    def xi(self) -> complex:
        """Squeeze parameter r exp(2 i theta)."""
        return self.squeeze_r * np.exp(2j * self.squeeze_theta)

    @property
    def mean_photons(self) -> float:
        return abs(self.V) ** 2


def _cosh_sinhc(s):
    """cosh(sqrt(s)) and sinh(sqrt(s))/sqrt(s), analytic in real s."""
    if abs(s) < _SERIES_LIMIT:
        return 1 + s / 2 + s * s / 24 + s**3 / 720, 1 + s / 6 + s * s / 120 + s**3 / 5040
    if s > 0:
        r = math.sqrt(s)
        return math.cosh(r), math.sinh(r) / r
    r = math.sqrt(-s)
    return math.cos(r), math.sin(r) / r


def bogoliubov(g0: float, gamma: float, D: float, l_c: float) -> BogoliubovCoefficients:
    """U, V for ``da_s/dz = gamma g0 a_i^dag exp(-i D z)`` (and s <-> i) at z = l_c.

    A single real-analytic branch covers both the amplifying
    (``|gamma g0| > |D|/2``) and the oscillating regime; near the threshold
    ``Gamma = 0`` a power series is used.
    """
    if not l_c > 0:
        raise ValueError("l_c must be > 0")
    gg = gamma * g0
    gamma2 = gg * gg - D * D / 4
    ch, shc = _cosh_sinhc(gamma2 * l_c * l_c)
    phase = complex(math.cos(D * l_c / 2), -math.sin(D * l_c / 2))
    U = complex(ch, D * l_c / 2 * shc) * phase
    V = gg * l_c * shc * phase
    r = math.asinh(abs(V))
    theta = 0.5 * np.angle(U * V) if V != 0 else 0.0
    return BogoliubovCoefficients(
        U=U,
        V=V,
        Gamma=complex(np.sqrt(complex(gamma2))),
        gamma_factor=float(gamma),
        D=float(D),
        squeeze_r=r,
        squeeze_theta=float(theta),
    )


def symplectic_form(n: int) -> np.ndarray:
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _interleave(n):
    # permutation from (x1..xn, p1..pn) to (x1, p1, x2, p2, ...)
    perm = np.empty(2 * n, dtype=int)
    perm[0::2] = np.arange(n)
    perm[1::2] = np.arange(n) + n
    return perm


def symplectic_from_bogoliubov(M, N) -> np.ndarray:
    """Real matrix acting on interleaved quadratures for ``a -> M a + N a^dag``."""
    M = np.asarray(M, dtype=complex)
    N = np.asarray(N, dtype=complex)
    n = M.shape[0]
    blocks = np.block(
        [
            [(M + N).real, -(M - N).imag],
            [(M + N).imag, (M - N).real],
        ]
    )
    perm = _interleave(n)
    return blocks[np.ix_(perm, perm)]


def two_mode_squeezer(n: int, j: int, k: int, coeff: BogoliubovCoefficients) -> np.ndarray:
    """Symplectic matrix of the Bogoliubov map on modes ``j``, ``k`` of ``n``."""
    M = np.eye(n, dtype=complex)
    N = np.zeros((n, n), dtype=complex)
    M[j, j] = M[k, k] = coeff.U
    N[j, k] = N[k, j] = coeff.V
    return symplectic_from_bogoliubov(M, N)


def passive_transform(unitary) -> np.ndarray:
    """Symplectic matrix of a passive mode mixer ``a -> W a``."""
    W = np.asarray(unitary, dtype=complex)
    return symplectic_from_bogoliubov(W, np.zeros_like(W))


@dataclass
class GaussianModeState:
    """Zero- or finite-mean Gaussian state over a few labelled modes."""

    mode_labels: tuple[str, ...]
    covariance: np.ndarray
    mean: np.ndarray = None

    def __post_init__(self):
        self.mode_labels = tuple(self.mode_labels)
        n = len(self.mode_labels)
        self.covariance = np.array(self.covariance, dtype=float)
        if self.covariance.shape != (2 * n, 2 * n):
            raise ValueError(f"covariance must be {2 * n}x{2 * n}")
        self.mean = np.zeros(2 * n) if self.mean is None else np.array(self.mean, dtype=float)
        if self.mean.shape != (2 * n,):
            raise ValueError(f"mean must have length {2 * n}")
        scale = max(1.0, float(np.max(np.abs(self.covariance))))
        if not np.allclose(self.covariance, self.covariance.T, rtol=0, atol=1e-12 * scale):
            raise StateValidityError("covariance matrix is not symmetric")

    @classmethod
    def vacuum(cls, labels: Sequence[str]) -> "GaussianModeState":
        n = len(labels)
        return cls(tuple(labels), 0.5 * np.eye(2 * n))

    @property
    def n_modes(self) -> int:
        return len(self.mode_labels)

    def index(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise KeyError(f"no mode labelled {label!r} in {self.mode_labels}") from None

    def transform(self, S, labels=None) -> "GaussianModeState":
        """Apply symplectic ``S``: ``cov -> S cov S^T``, ``mean -> S mean``."""
        S = np.asarray(S, dtype=float)
        cov = S @ self.covariance @ S.T
        cov = 0.5 * (cov + cov.T)
        return GaussianModeState(labels or self.mode_labels, cov, S @ self.mean)

    def symplectic_eigenvalues(self) -> np.ndarray:
        ev = np.linalg.eigvals(1j * symplectic_form(self.n_modes) @ self.covariance)
        return np.sort(np.abs(ev.real))[::2]

    def validate(self, tol: float = 1e-9) -> None:
        nu = self.symplectic_eigenvalues()
        if nu.min() < 0.5 - tol:
            raise StateValidityError(
                f"uncertainty relation violated: smallest symplectic eigenvalue {nu.min():.3e} < 1/2"
            )

    def normal_moments(self):
        """``N_jk = <a_j^dag a_k>`` and ``M_jk = <a_j a_k>`` (zero-mean part)."""
        n = self.n_modes
        S = self.covariance
        x = S[0::2, 0::2]
        p = S[1::2, 1::2]
        xp = S[0::2, 1::2]  # <x_j p_k>_sym
        px = S[1::2, 0::2]  # <p_j x_k>_sym
        N = 0.5 * (x + p + 1j * (xp - px)) - 0.5 * np.eye(n)
        M = 0.5 * (x - p + 1j * (xp + px))
        return N, M

    def mean_photon_numbers(self) -> dict[str, float]:
        N, _ = self.normal_moments()
        coh = 0.5 * (self.mean[0::2] ** 2 + self.mean[1::2] ** 2)
        return {lab: float(N[j, j].real + coh[j]) for j, lab in enumerate(self.mode_labels)}

    def reordered(self, labels: Sequence[str]) -> "GaussianModeState":
        idx = [self.index(lab) for lab in labels]
        perm = np.ravel([[2 * j, 2 * j + 1] for j in idx])
        return GaussianModeState(
            tuple(labels), self.covariance[np.ix_(perm, perm)], self.mean[perm]
        )


@dataclass(frozen=True)
class GoldenRatioSplit:
    """Unbalanced beam splitter relating (b, c) to the decoupled (delta, sigma)."""

    phi: float = PHI
    t: float = field(init=False)
    r: float = field(init=False)

    def __post_init__(self):
        norm = math.sqrt(1 + self.phi**2)
        object.__setattr__(self, "t", 1 / norm)
        object.__setattr__(self, "r", self.phi / norm)

    @property
    def forward(self) -> np.ndarray:
        """(delta, sigma) = forward @ (b, c)."""
        return np.array([[self.t, -self.r], [self.r, self.t]])

    @property
    def inverse(self) -> np.ndarray:
        """(b, c) = inverse @ (delta, sigma)."""
        return self.forward.T


def coupling_pattern(system: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Coupling matrix ``C`` of ``da/dz = g0 exp(-iDz) C a^dag`` and its labels."""
    if system == "two_mode":
        return np.array([[0.0, 1.0], [1.0, 0.0]]), ("s", "i")
    if system == "three_mode":
        C = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        return C, THREE_MODE_LABELS
    if system == "four_mode":
        # b_s <- b_i + c_i, c_s <- b_i, b_i <- b_s + c_s, c_i <- b_s
        C = np.array(
            [
                [0.0, 0.0, 1.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
            ]
        )
        return C, FOUR_MODE_LABELS
    raise ValueError(f"unknown system {system!r}")


def golden_decoupling(g0: float = 1.0):
    """Conjugate the 4-mode coupling by the golden-ratio transformation.

    Returns ``(K', labels)`` where ``K' = T K T^T`` is expressed over the
    modes ``(delta_s, delta_i, sigma_s, sigma_i)``; it is block diagonal with
    off-diagonal gains ``-g0/phi`` and ``g0 phi``.
    """
    C, _ = coupling_pattern("four_mode")
    T2 = GoldenRatioSplit().forward
    # rows of T act on (b_j, c_j); modes ordered (b_s, c_s, b_i, c_i)
    T = np.zeros((4, 4))
    T[np.ix_([0, 2], [0, 1])] = T2  # delta_s, sigma_s from b_s, c_s
    T[np.ix_([1, 3], [2, 3])] = T2  # delta_i, sigma_i from b_i, c_i
    K = g0 * (T @ C @ T.T)
    return K, ("delta_s", "delta_i", "sigma_s", "sigma_i")


def _input_state(input_state, labels):
    if input_state is None:
        return GaussianModeState.vacuum(labels)
    return input_state.reordered(labels)


def solve_two_mode(pump: PumpConfig, D: float, gamma: float = 1.0, input_state=None):
    """Single conjugate pair with gain enhancement ``gamma``."""
    state = _input_state(input_state, ("s", "i"))
    coeff = bogoliubov(pump.g0, gamma, D, pump.l_c)
    return state.transform(two_mode_squeezer(2, 0, 1, coeff))


def solve_three_mode(pump: PumpConfig, D: float, input_state=None) -> GaussianModeState:
    """Shared signal ``s0`` coupled to idlers ``i1``, ``i2``.

    Sum/difference idlers ``i+- = (i1 +- i2)/sqrt(2)``; ``(s0, i+)`` is a
    two-mode squeezer with ``gamma = sqrt(2)``, ``i-`` is untouched, then the
    50:50 splitter maps back to ``(i1, i2)``.
    """
    state = _input_state(input_state, THREE_MODE_LABELS)
    h = 1 / math.sqrt(2)
    bs = np.array([[1, 0, 0], [0, h, h], [0, h, -h]], dtype=complex)
    S_bs = passive_transform(bs)  # self-inverse
    coeff = bogoliubov(pump.g0, math.sqrt(2), D, pump.l_c)
    S = S_bs @ two_mode_squeezer(3, 0, 1, coeff) @ S_bs
    return state.transform(S)


def solve_four_mode_resonant(pump: PumpConfig, D: float, input_state=None) -> GaussianModeState:
    """Resonant 4-mode system over ``(b_s, c_s, b_i, c_i)``.

    Decoupled by the golden-ratio splitter into squeezers with
    ``gamma = phi`` on ``(sigma_s, sigma_i)`` and ``gamma = -1/phi`` on
    ``(delta_s, delta_i)``, then mixed back with ``b = t delta + r sigma``,
    ``c = -r delta + t sigma``. The pump is assumed to be at resonance.
    """
    state = _input_state(input_state, FOUR_MODE_LABELS)
    T2 = GoldenRatioSplit().forward
    # (b_s, c_s, b_i, c_i) -> (delta_s, sigma_s, delta_i, sigma_i)
    W = np.zeros((4, 4), dtype=complex)
    W[:2, :2] = T2
    W[2:, 2:] = T2
    S_in = passive_transform(W)
    S_out = passive_transform(W.T)
    sig = bogoliubov(pump.g0, PHI, D, pump.l_c)
    dlt = bogoliubov(pump.g0, -1 / PHI, D, pump.l_c)
    S_sq = two_mode_squeezer(4, 1, 3, sig) @ two_mode_squeezer(4, 0, 2, dlt)
    return state.transform(S_out @ S_sq @ S_in)


def _rk4_propagators(C, g0, D, l_c, steps):
    """Per-step RK4 matrices of the quadrature equations ``dX/dz = G(z) X``."""
    n = C.shape[0]
    # K = g0 exp(-iDz) C -> x' = ReK x + ImK p, p' = ImK x - ReK p
    A_cos = g0 * np.kron(C, np.array([[1.0, 0.0], [0.0, -1.0]]))
    A_sin = g0 * np.kron(C, np.array([[0.0, -1.0], [-1.0, 0.0]]))
    h = l_c / steps
    z = np.arange(steps) * h

    def G(zz):
        return np.cos(D * zz)[:, None, None] * A_cos + np.sin(D * zz)[:, None, None] * A_sin

    I = np.eye(2 * n)
    G1, G2, G4 = G(z), G(z + h / 2), G(z + h)
    G3 = G2
    P2 = I + h / 2 * G1
    P3 = I + h / 2 * (G2 @ P2)
    P4 = I + h * (G3 @ P3)
    return I + h / 6 * (G1 + 2 * G2 @ P2 + 2 * G3 @ P3 + G4 @ P4)


def _ordered_product(P):
    """P[-1] @ ... @ P[0] by pairwise reduction."""
    P = np.asarray(P)
    while P.shape[0] > 1:
        if P.shape[0] % 2:
            P = np.concatenate([P, np.eye(P.shape[1])[None]], axis=0)
        P = P[1::2] @ P[0::2]
    return P[0]


def integrate_ode_oracle(
    system: str, pump: PumpConfig, D: float, steps: int = 10_000, input_state=None
) -> GaussianModeState:
    """Direct RK4 integration of the linear mode equations.

    Integrates the real quadrature form of ``da/dz = g0 exp(-iDz) C a^dag``
    for ``system`` in ``{"two_mode", "three_mode", "four_mode"}`` with
    ``steps`` fixed steps, and propagates the input covariance through the
    resulting linear map. Independent of the canonical transformations used
    by :func:`solve_three_mode` / :func:`solve_four_mode_resonant`.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    C, labels = coupling_pattern(system)
    state = _input_state(input_state, labels)
    Phi = _ordered_product(_rk4_propagators(C, pump.g0, D, pump.l_c, steps))
    return state.transform(Phi)


@dataclass
class FibonacciTrajectory:
    z: np.ndarray  # normalised distance g0 z
    B: np.ndarray
    C: np.ndarray
    B_recursion: np.ndarray  # discrete-layer recursion, same grid
    eigenvalues: np.ndarray

    @property
    def ratio(self) -> float:
        return float(self.B[-1] / self.C[-1])


FIBONACCI_MATRIX = np.array([[1.0, 1.0], [1.0, 0.0]])


def quadrature_fibonacci(
    g0: float, z_max: float, steps: int = 2000, B0: float = 1.0, C0: float = 0.0
) -> FibonacciTrajectory:
    """Most-amplified quadratures of the resonant system at D = 0.

    Integrates ``dB/dzbar = B + C``, ``dC/dzbar = B`` over ``zbar = g0 z``
    in ``[0, g0 z_max]`` with RK4, and alongside it the layer recursion
    ``B_{n+1} = (2 + dz) B_n + (dz^2 - 1 - dz) B_{n-1}``.
    """
    zbar = g0 * z_max
    h = zbar / steps
    A = FIBONACCI_MATRIX
    I = np.eye(2)
    step = I + h * A + (h * A) @ (h * A) / 2 + np.linalg.matrix_power(h * A, 3) / 6
    step += np.linalg.matrix_power(h * A, 4) / 24
    X = np.empty((steps + 1, 2))
    X[0] = (B0, C0)
    for n in range(steps):
        X[n + 1] = step @ X[n]
    Br = np.empty(steps + 1)
    Br[0] = B0
    if steps >= 1:
        Br[1] = B0 + h * (B0 + C0)
    for n in range(1, steps):
        Br[n + 1] = (2 + h) * Br[n] + (h * h - 1 - h) * Br[n - 1]
    return FibonacciTrajectory(
        z=np.linspace(0.0, zbar, steps + 1),
        B=X[:, 0],
        C=X[:, 1],
        B_recursion=Br,
        eigenvalues=np.sort(np.linalg.eigvalsh(A)),
    )


def fibonacci_integers(n: int, F1: int = 1, N1: int = 0) -> list[tuple[int, int]]:
    """Adults/newborns ``(F_k, N_k)`` for k = 1..n: F' = F + N, N' = F."""
    out = [(F1, N1)]
    for _ in range(n - 1):
        F, N = out[-1]
        out.append((F + N, F))
    return out


@dataclass
class CorrelationReport:
    labels: tuple[str, ...]
    mean_numbers: np.ndarray
    number_covariance: np.ndarray  # <dn_j dn_k>
    g2: np.ndarray  # <:n_j n_k:> / (<n_j><n_k>)
    difference_variance: dict  # (a, b) -> Var(n_a - n_b)
    quadrature_variances: dict  # (a, b) -> {"x+x", "x-x", "p+p", "p-p"}

    def covariance(self, a: str, b: str) -> float:
        return float(self.number_covariance[self.labels.index(a), self.labels.index(b)])

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "mean_numbers": self.mean_numbers.tolist(),
            "number_covariance": self.number_covariance.tolist(),
            "g2": np.where(np.isfinite(self.g2), self.g2, None).tolist(),
            "difference_variance": {f"{a}-{b}": v for (a, b), v in self.difference_variance.items()},
            "quadrature_variances": {f"{a},{b}": v for (a, b), v in self.quadrature_variances.items()},
        }


def correlations(state: GaussianModeState, tol: float = 1e-9) -> CorrelationReport:
    """Photon-number and quadrature correlations of a zero-mean Gaussian state.

    Photon-number moments follow from Wick factorisation of the normally
    ordered moments, obtained from the symmetric covariance by removing the
    vacuum 1/2 per mode.

    Raises
    ------
    StateValidityError
        If the covariance violates the uncertainty relation.
    """
    state.validate(tol)
    if np.any(np.abs(state.mean) > 0):
        raise ValueError("correlations() expects a zero-mean state")
    N, M = state.normal_moments()
    n = N.diagonal().real.copy()
    cov = np.abs(N) ** 2 + np.abs(M) ** 2 + np.diag(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        normal = cov + np.outer(n, n) - np.diag(n)
        g2 = normal / np.outer(n, n)
    labels = state.mode_labels
    S = state.covariance
    diff, quad = {}, {}
    for j, k in combinations(range(len(labels)), 2):
        key = (labels[j], labels[k])
        diff[key] = float(cov[j, j] + cov[k, k] - 2 * cov[j, k])
        xj, pj, xk, pk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
        quad[key] = {
            "x+x": float(S[xj, xj] + S[xk, xk] + 2 * S[xj, xk]),
            "x-x": float(S[xj, xj] + S[xk, xk] - 2 * S[xj, xk]),
            "p+p": float(S[pj, pj] + S[pk, pk] + 2 * S[pj, pk]),
            "p-p": float(S[pj, pj] + S[pk, pk] - 2 * S[pj, pk]),
        }
    return CorrelationReport(labels, n, cov, g2, diff, quad)


def dump_state(state: GaussianModeState, path=None, **extra) -> dict:
    """Structured state dump: labels, row-major covariance, mean, intensities."""
    doc = {
        "schema": "gaussian_state/1",
        "mode_labels": list(state.mode_labels),
        "covariance": state.covariance.ravel().tolist(),
        "mean": state.mean.tolist(),
        "intensities": state.mean_photon_numbers(),
    }
    doc.update(extra)
    if path is not None:
        Path(path).write_text(json.dumps(doc, indent=2))
    return doc


def load_state_dump(path) -> GaussianModeState:
    doc = json.loads(Path(path).read_text())
    n = len(doc["mode_labels"])
    cov = np.asarray(doc["covariance"], dtype=float).reshape(2 * n, 2 * n)
    return GaussianModeState(tuple(doc["mode_labels"]), cov, doc.get("mean"))
